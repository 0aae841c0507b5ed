#include "hfa/evaluation.hpp"

#include "hfa/csv.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>

namespace hfa::evaluation {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::set<SentenceId> sentence_keys(const Annotations& a, const Annotations& b) {
    std::set<SentenceId> keys;
    for (const auto& [id, _] : a) keys.insert(id);
    for (const auto& [id, _] : b) keys.insert(id);
    return keys;
}

const ConceptSet& lookup(const Annotations& a, const SentenceId& id) {
    static const ConceptSet kEmpty;
    auto it = a.find(id);
    return it == a.end() ? kEmpty : it->second;
}

std::string label_of(const taxonomy::Taxonomy& taxonomy, const ConceptCode& code) {
    const auto* node = taxonomy.find(code);
    return node ? node->canonical_label : code.str();
}

std::string pct_cell(const std::optional<double>& v) { return render(v, 2); }

}  // namespace

ConfusionCounts accumulate_confusion(const ConceptSet& predicted, const ConceptSet& actual, const ConceptSet& universe) {
    for (const auto* s : {&predicted, &actual}) {
        for (const auto& c : *s) {
            if (!universe.contains(c)) {
                throw Error(ErrorCode::ConceptOutsideUniverse, "concept " + c.str() + " is outside the evaluation universe");
            }
        }
    }
    ConfusionCounts out;
    for (const auto& c : predicted) {
        if (actual.contains(c)) ++out.tp;
        else ++out.fp;
    }
    for (const auto& c : actual) {
        if (!predicted.contains(c)) ++out.fn;
    }
    out.tn = universe.size() - (out.tp + out.fp + out.fn);
    return out;
}

MetricsReport compute_metrics(const ConfusionCounts& c) {
    MetricsReport m;
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.tpr = m.recall;
    m.tnr = ratio(c.tn, c.tn + c.fp);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
        m.f_score = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
    if (m.accuracy) m.misclassification = 1.0 - *m.accuracy;
    if (m.tpr && m.tnr) m.balanced_accuracy = (*m.tpr + *m.tnr) / 2.0;
    return m;
}

std::string render(const std::optional<double>& value, int decimals) {
    return value ? text::fixed(*value, decimals) : "-";
}

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    out.mean = mean;
    if (values.size() == 1) {
        out.sd = 0.0;
        return out;
    }
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    out.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
    return out;
}

std::vector<MetricSummaryRow> per_sentence_summary(const Annotations& predicted, const Annotations& gold,
                                                   const ConceptSet& universe) {
    using Field = std::optional<double> MetricsReport::*;
    const std::vector<std::pair<std::string, Field>> fields = {
        {"Precision", &MetricsReport::precision},
        {"Recall", &MetricsReport::recall},
        {"F-score", &MetricsReport::f_score},
        {"Misclassification", &MetricsReport::misclassification},
        {"Accuracy", &MetricsReport::accuracy},
        {"Balanced Accuracy", &MetricsReport::balanced_accuracy},
    };
    std::vector<std::vector<double>> values(fields.size());
    for (const auto& id : sentence_keys(predicted, gold)) {
        const auto m = compute_metrics(accumulate_confusion(lookup(predicted, id), lookup(gold, id), universe));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (const auto& v = m.*(fields[i].second)) values[i].push_back(*v);
        }
    }
    std::vector<MetricSummaryRow> rows;
    for (std::size_t i = 0; i < fields.size(); ++i) rows.push_back({fields[i].first, mean_sd(values[i])});
    return rows;
}

ConfusionCounts overall_counts(const Annotations& predicted, const Annotations& gold, const ConceptSet& universe) {
    ConfusionCounts total;
    for (const auto& id : sentence_keys(predicted, gold)) {
        total += accumulate_confusion(lookup(predicted, id), lookup(gold, id), universe);
    }
    return total;
}

std::vector<ConceptRow> per_concept_table(const Annotations& predicted, const Annotations& gold,
                                          const ConceptSet& universe) {
    std::map<ConceptCode, ConfusionCounts> counts;
    for (const auto& c : universe) counts[c];
    for (const auto& id : sentence_keys(predicted, gold)) {
        const auto& p = lookup(predicted, id);
        const auto& g = lookup(gold, id);
        accumulate_confusion(p, g, universe);
        for (auto& [c, cc] : counts) {
            const bool in_p = p.contains(c);
            const bool in_g = g.contains(c);
            if (in_p && in_g) ++cc.tp;
            else if (in_p) ++cc.fp;
            else if (in_g) ++cc.fn;
            else ++cc.tn;
        }
    }
    std::vector<ConceptRow> rows;
    rows.reserve(counts.size());
    for (const auto& [c, cc] : counts) {
        ConceptRow row{c, cc, compute_metrics(cc), std::nullopt};
        if (auto r = ratio(cc.tp, cc.tp + cc.fn)) row.pct_correct = *r * 100.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::map<std::string, std::pair<Annotations, Annotations>> split_by_group(const Annotations& predicted,
                                                                         const Annotations& gold,
                                                                         const GroupLookup& group_of) {
    std::map<std::string, std::pair<Annotations, Annotations>> out;
    for (const auto& id : sentence_keys(predicted, gold)) {
        auto& [p, g] = out[group_of(id)];
        if (auto it = predicted.find(id); it != predicted.end()) p.emplace(id, it->second);
        if (auto it = gold.find(id); it != gold.end()) g.emplace(id, it->second);
    }
    return out;
}

}  // namespace

std::map<std::string, std::vector<ConceptRow>> per_group_concept_table(const Annotations& predicted,
                                                                       const Annotations& gold,
                                                                       const ConceptSet& universe,
                                                                       const GroupLookup& group_of) {
    std::map<std::string, std::vector<ConceptRow>> out;
    for (const auto& [group, pg] : split_by_group(predicted, gold, group_of)) {
        out.emplace(group, per_concept_table(pg.first, pg.second, universe));
    }
    return out;
}

GroupTable per_group_table(const Annotations& predicted, const Annotations& gold, const GroupLookup& group_of) {
    GroupTable table;
    std::vector<double> pcts;
    for (const auto& [group, pg] : split_by_group(predicted, gold, group_of)) {
        GroupRow row;
        row.group = group;
        for (const auto& [id, g] : pg.second) {
            const auto& p = lookup(pg.first, id);
            for (const auto& c : g) {
                if (p.contains(c)) ++row.correct;
                else ++row.incorrect;
            }
        }
        if (auto r = ratio(row.correct, row.correct + row.incorrect)) {
            row.pct_correct = *r * 100.0;
            pcts.push_back(*row.pct_correct);
        }
        table.sum_correct += row.correct;
        table.sum_incorrect += row.incorrect;
        table.rows.push_back(std::move(row));
    }
    if (auto r = ratio(table.sum_correct, table.sum_correct + table.sum_incorrect)) table.pooled_pct = *r * 100.0;
    table.sd_pct = mean_sd(pcts).sd;
    return table;
}

// ---------------------------------------------------------------------------

IrrResult inter_rater_reliability(const MultiAnnotatorSet& set, IrrMode mode) {
    if (set.size() < 2) throw Error(ErrorCode::FewerThanTwoAnnotators, "IRR needs at least two annotators");
    std::set<SentenceId> sentences;
    for (const auto& [_, ann] : set) {
        for (const auto& [id, __] : ann) sentences.insert(id);
    }
    IrrResult r;
    r.annotators = set.size();
    for (const auto& id : sentences) {
        auto it = set.begin();
        ConceptSet inter = lookup(it->second, id);
        ConceptSet uni = inter;
        for (++it; it != set.end(); ++it) {
            const auto& s = lookup(it->second, id);
            ConceptSet next;
            std::set_intersection(inter.begin(), inter.end(), s.begin(), s.end(), std::inserter(next, next.end()));
            inter = std::move(next);
            uni.insert(s.begin(), s.end());
        }
        r.agreements += inter.size();
        r.total_concepts += uni.size();
    }
    const std::uint64_t denom = mode == IrrMode::Union ? r.total_concepts : r.total_concepts * r.annotators;
    r.irr = denom == 0 ? 1.0 : static_cast<double>(r.agreements) / static_cast<double>(denom);
    return r;
}

std::vector<IrrDocumentRow> irr_by_document(const MultiAnnotatorSet& set) {
    std::set<SentenceId> sentences;
    for (const auto& [_, ann] : set) {
        for (const auto& [id, __] : ann) sentences.insert(id);
    }
    std::vector<IrrDocumentRow> rows;
    for (const auto& id : sentences) {
        if (rows.empty() || rows.back().doc_id != id.doc_id) rows.push_back({id.doc_id, std::vector<std::size_t>(set.size()), 0});
        auto& row = rows.back();
        std::size_t i = 0;
        const ConceptSet* first = nullptr;
        bool all_same = true;
        for (const auto& [_, ann] : set) {
            const auto& s = lookup(ann, id);
            if (!s.empty()) ++row.coded[i];
            if (!first) first = &s;
            else if (s != *first) all_same = false;
            ++i;
        }
        if (all_same && !first->empty()) ++row.agreement;
    }
    return rows;
}

// ---------------------------------------------------------------------------

Annotations read_annotations_jsonl(std::string_view content, const taxonomy::Taxonomy& taxonomy) {
    Annotations out;
    std::size_t line_no = 0;
    for (const auto& line : text::split(content, '\n')) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            SentenceId id{j.at("doc_id").get<std::string>(), j.at("idx").get<std::size_t>()};
            auto& set = out[id];
            for (const auto& c : j.at("concepts")) {
                const auto label = c.is_object() ? c.at("code").get<std::string>() : c.get<std::string>();
                try {
                    set.insert(taxonomy.resolve(label).code);
                } catch (const Error& e) {
                    throw Error(ErrorCode::UnresolvableConcept, e.what());
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw PositionedError(ErrorCode::InvalidArgument, line_no, std::string("bad annotation line: ") + e.what());
        }
    }
    return out;
}

std::string write_annotations_jsonl(const Annotations& annotations) {
    std::string out;
    for (const auto& [id, set] : annotations) {
        nlohmann::ordered_json j;
        j["doc_id"] = id.doc_id;
        j["idx"] = id.index;
        auto codes = nlohmann::ordered_json::array();
        for (const auto& c : set) codes.push_back(c.str());
        j["concepts"] = std::move(codes);
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

std::string summary_csv(const std::vector<MetricSummaryRow>& rows) {
    std::string out = csv::format_row({"metric", "avg", "sd"});
    for (const auto& r : rows) out += csv::format_row({r.metric, render(r.value.mean), render(r.value.sd)});
    return out;
}

std::string concept_csv(const std::vector<ConceptRow>& rows, const taxonomy::Taxonomy& taxonomy,
                        const std::string& column) {
    std::string out = csv::format_row({"concept", column});
    std::vector<double> defined;
    for (const auto& r : rows) {
        out += csv::format_row({label_of(taxonomy, r.code), pct_cell(r.pct_correct)});
        if (r.pct_correct) defined.push_back(*r.pct_correct);
    }
    const auto s = mean_sd(defined);
    out += csv::format_row({"Average", pct_cell(s.mean)});
    out += csv::format_row({"SD", pct_cell(s.sd)});
    return out;
}

std::string group_concept_csv(const std::map<std::string, std::vector<ConceptRow>>& table,
                              const taxonomy::Taxonomy& taxonomy) {
    csv::Row header{"concept"};
    std::set<ConceptCode> concepts;
    std::map<std::string, std::map<ConceptCode, std::optional<double>>> cells;
    for (const auto& [group, rows] : table) {
        header.push_back(group);
        for (const auto& r : rows) {
            concepts.insert(r.code);
            cells[group][r.code] = r.pct_correct;
        }
    }
    header.push_back("Average");
    header.push_back("SD");
    std::string out = csv::format_row(header);
    for (const auto& c : concepts) {
        csv::Row row{label_of(taxonomy, c)};
        std::vector<double> defined;
        for (const auto& [group, _] : table) {
            const auto& g = cells[group];
            auto it = g.find(c);
            const auto v = it == g.end() ? std::nullopt : it->second;
            row.push_back(pct_cell(v));
            if (v) defined.push_back(*v);
        }
        const auto s = mean_sd(defined);
        row.push_back(pct_cell(s.mean));
        row.push_back(pct_cell(s.sd));
        out += csv::format_row(row);
    }
    return out;
}

std::string group_csv(const GroupTable& table) {
    std::string out = csv::format_row({"ethnicity", "correct", "incorrect", "correct_pct"});
    for (const auto& r : table.rows) {
        out += csv::format_row({r.group, std::to_string(r.correct), std::to_string(r.incorrect), pct_cell(r.pct_correct)});
    }
    out += csv::format_row({"Total", std::to_string(table.sum_correct), std::to_string(table.sum_incorrect),
                            pct_cell(table.pooled_pct) + " ± " + pct_cell(table.sd_pct)});
    return out;
}

std::string irr_csv(const MultiAnnotatorSet& set) {
    csv::Row header{"report"};
    for (const auto& [annotator, _] : set) header.push_back(annotator);
    header.push_back("agreement");
    std::string out = csv::format_row(header);
    for (const auto& r : irr_by_document(set)) {
        csv::Row row{r.doc_id};
        for (auto n : r.coded) row.push_back(std::to_string(n));
        row.push_back(std::to_string(r.agreement));
        out += csv::format_row(row);
    }
    return out;
}

std::string overall_csv(const ConfusionCounts& counts) {
    const auto m = compute_metrics(counts);
    std::string out = csv::format_row({"metric", "value"});
    out += csv::format_row({"TP", std::to_string(counts.tp)});
    out += csv::format_row({"FP", std::to_string(counts.fp)});
    out += csv::format_row({"FN", std::to_string(counts.fn)});
    out += csv::format_row({"TN", std::to_string(counts.tn)});
    out += csv::format_row({"Precision", render(m.precision)});
    out += csv::format_row({"Recall", render(m.recall)});
    out += csv::format_row({"F-score", render(m.f_score)});
    out += csv::format_row({"Misclassification", render(m.misclassification)});
    out += csv::format_row({"Accuracy", render(m.accuracy)});
    out += csv::format_row({"Balanced Accuracy", render(m.balanced_accuracy)});
    return out;
}

}  // namespace hfa::evaluation
