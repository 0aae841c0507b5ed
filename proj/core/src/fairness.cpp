#include "hfa/fairness.hpp"

#include "hfa/csv.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hfa::fairness {

std::string_view to_string(WilcoxonMethod method) {
    return method == WilcoxonMethod::Exact ? "exact" : "normal_approximation";
}

double exact_p_value(std::size_t n, double w) {
    const std::size_t max_sum = n * (n + 1) / 2;
    // counts[s] = number of sign patterns with W+ = s.
    std::vector<double> counts(max_sum + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t s = max_sum; s >= r; --s) counts[s] += counts[s - r];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n));
    const auto limit = static_cast<std::size_t>(std::floor(w + 1e-9));
    double tail = 0.0;
    for (std::size_t s = 0; s <= std::min(limit, max_sum); ++s) tail += counts[s];
    return std::min(1.0, 2.0 * tail / total);
}

WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample, const WilcoxonConfig& config) {
    if (sample.pairs.empty()) throw Error(ErrorCode::EmptySample, "paired sample is empty");
    std::vector<double> diffs;
    for (const auto& [x, y] : sample.pairs) {
        if (y - x != 0.0) diffs.push_back(y - x);
    }
    if (diffs.empty()) throw Error(ErrorCode::AllZeroDifferences, "all paired differences are zero");

    const std::size_t n = diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::fabs(diffs[a]) < std::fabs(diffs[b]); });

    std::vector<double> ranks(n);
    double tie_term = 0.0;
    bool ties = false;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]])) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j + 1;
    }

    WilcoxonResult r;
    r.n_effective = n;
    for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
    r.w = std::min(r.w_plus, r.w_minus);

    if (!ties && n <= config.exact_cutoff) {
        r.method = WilcoxonMethod::Exact;
        r.p_value = exact_p_value(n, r.w);
        return r;
    }
    r.method = WilcoxonMethod::NormalApproximation;
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    double num = r.w - mean;  // <= 0 since w is the smaller sum
    if (config.continuity_correction) num = std::min(0.0, num + 0.5);
    const double z = var > 0.0 ? num / std::sqrt(var) : 0.0;
    r.z = z;
    r.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
    return r;
}

GroupConceptTable to_group_concept_table(const std::map<std::string, std::vector<evaluation::ConceptRow>>& table) {
    GroupConceptTable out;
    for (const auto& [group, rows] : table) {
        auto& col = out[group];
        for (const auto& r : rows) col[r.code] = r.pct_correct;
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptySample, "median of an empty sample");
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
}

namespace {

GroupStats stats_of(const std::vector<double>& values) {
    return {median(values), evaluation::mean_sd(values).sd};
}

}  // namespace

Comparison compare_columns(const std::map<ConceptCode, std::optional<double>>& a,
                           const std::map<ConceptCode, std::optional<double>>& b, const std::string& label_a,
                           const std::string& label_b, const WilcoxonConfig& config) {
    Comparison c;
    c.label_a = label_a;
    c.label_b = label_b;
    PairedSample sample;
    std::vector<double> xs, ys;
    for (const auto& [code, va] : a) {
        auto it = b.find(code);
        if (!va || it == b.end() || !it->second) continue;
        c.concepts.push_back(code);
        sample.keys.push_back(code.str());
        sample.pairs.emplace_back(*va, *it->second);
        xs.push_back(*va);
        ys.push_back(*it->second);
    }
    if (c.concepts.empty()) {
        throw Error(ErrorCode::NoCommonConcepts, label_a + " and " + label_b + " share no defined concepts");
    }
    c.a = stats_of(xs);
    c.b = stats_of(ys);
    try {
        c.test = wilcoxon_signed_rank(sample, config);
        c.p_value = c.test->p_value;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::AllZeroDifferences) throw;
        c.no_difference = true;
        c.p_value = 1.0;
    }
    return c;
}

Comparison compare_groups(const GroupConceptTable& table, const std::string& group_a, const std::string& group_b,
                          const WilcoxonConfig& config) {
    auto a = table.find(group_a);
    auto b = table.find(group_b);
    if (a == table.end()) throw Error(ErrorCode::NotFound, "group '" + group_a + "' not in table");
    if (b == table.end()) throw Error(ErrorCode::NotFound, "group '" + group_b + "' not in table");
    return compare_columns(a->second, b->second, group_a, group_b, config);
}

std::vector<std::pair<std::string, std::optional<Comparison>>> compare_versions(const GroupConceptTable& before,
                                                                               const GroupConceptTable& after,
                                                                               const WilcoxonConfig& config) {
    std::vector<std::pair<std::string, std::optional<Comparison>>> out;
    for (const auto& [group, col] : before) {
        auto it = after.find(group);
        if (it == after.end()) continue;
        try {
            out.emplace_back(group, compare_columns(col, it->second, "before", "after", config));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCommonConcepts) throw;
            out.emplace_back(group, std::nullopt);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<std::uint64_t> ceil_div(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return (num + den - 1) / den;
}

}  // namespace

DistributionReport group_distribution_report(const std::map<std::string, std::string>& doc_groups,
                                             const evaluation::Annotations& annotations) {
    std::map<std::string, DistributionRow> rows;
    for (const auto& [doc, group] : doc_groups) {
        auto& row = rows[group];
        row.group = group;
        ++row.reports;
    }
    for (const auto& [id, set] : annotations) {
        auto it = doc_groups.find(id.doc_id);
        if (it != doc_groups.end()) rows[it->second].concepts += set.size();
    }
    DistributionReport report;
    report.total.group = "Total";
    for (auto& [_, row] : rows) {
        row.avg_concepts = ceil_div(row.concepts, row.reports);
        report.total.reports += row.reports;
        report.total.concepts += row.concepts;
        report.rows.push_back(row);
    }
    report.total.avg_concepts = ceil_div(report.total.concepts, report.total.reports);
    return report;
}

DistributionReport group_distribution_report(const corpus::Corpus& corpus, const evaluation::Annotations& annotations) {
    std::map<std::string, std::string> doc_groups;
    for (const auto& d : corpus.documents()) doc_groups[d.doc_id] = corpus.group_of(d.doc_id);
    return group_distribution_report(doc_groups, annotations);
}

// ---------------------------------------------------------------------------

std::string versions_csv(const std::vector<std::pair<std::string, std::optional<Comparison>>>& rows) {
    std::string out = csv::format_row({"ethnicity", "W", "p"});
    for (const auto& [group, c] : rows) {
        if (!c) {
            out += csv::format_row({group, "-", "-"});
        } else if (c->no_difference) {
            out += csv::format_row({group, "-", text::fixed(1.0, 2)});
        } else {
            out += csv::format_row({group, text::fixed(c->test->w, 1), text::fixed(c->p_value, 2)});
        }
    }
    return out;
}

std::string comparison_csv(const Comparison& c) {
    auto opt = [](const std::optional<double>& v, int d) { return v ? text::fixed(*v, d) : std::string("-"); };
    std::string out = csv::format_row({"key", "value"});
    out += csv::format_row({"group_a", c.label_a});
    out += csv::format_row({"group_b", c.label_b});
    out += csv::format_row({"pairs", std::to_string(c.concepts.size())});
    out += csv::format_row({"median_a", opt(c.a.median, 2)});
    out += csv::format_row({"sd_a", opt(c.a.sd, 2)});
    out += csv::format_row({"median_b", opt(c.b.median, 2)});
    out += csv::format_row({"sd_b", opt(c.b.sd, 2)});
    if (c.no_difference) {
        out += csv::format_row({"result", "no difference"});
    } else {
        const auto& t = *c.test;
        out += csv::format_row({"n_effective", std::to_string(t.n_effective)});
        out += csv::format_row({"W+", text::fixed(t.w_plus, 1)});
        out += csv::format_row({"W-", text::fixed(t.w_minus, 1)});
        out += csv::format_row({"W", text::fixed(t.w, 1)});
        out += csv::format_row({"Z", opt(t.z, 3)});
        out += csv::format_row({"method", std::string(to_string(t.method))});
    }
    out += csv::format_row({"p", text::fixed(c.p_value, 2)});
    return out;
}

std::string distribution_csv(const DistributionReport& report) {
    auto avg = [](const DistributionRow& r) { return r.avg_concepts ? std::to_string(*r.avg_concepts) : std::string("-"); };
    std::string out = csv::format_row({"ethnicity", "reports", "concepts", "avg_concepts_per_report"});
    auto row = [&](const DistributionRow& r) {
        out += csv::format_row({r.group, std::to_string(r.reports), std::to_string(r.concepts), avg(r)});
    };
    for (const auto& r : report.rows) row(r);
    row(report.total);
    return out;
}

}  // namespace hfa::fairness
