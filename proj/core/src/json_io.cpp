#include "hfa/json_io.hpp"

namespace hfa::json_io {

Json to_json(const std::optional<double>& value) { return value ? Json(*value) : Json(nullptr); }

Json to_json(const evaluation::ConfusionCounts& c) {
    return Json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

Json to_json(const evaluation::MetricsReport& m) {
    Json j;
    j["precision"] = to_json(m.precision);
    j["recall"] = to_json(m.recall);
    j["f_score"] = to_json(m.f_score);
    j["accuracy"] = to_json(m.accuracy);
    j["misclassification"] = to_json(m.misclassification);
    j["balanced_accuracy"] = to_json(m.balanced_accuracy);
    j["tpr"] = to_json(m.tpr);
    j["tnr"] = to_json(m.tnr);
    return j;
}

Json to_json(const evaluation::MeanSd& v) {
    Json j;
    j["mean"] = to_json(v.mean);
    j["sd"] = to_json(v.sd);
    j["n"] = v.n;
    return j;
}

Json to_json(const std::vector<evaluation::MetricSummaryRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j;
        j["metric"] = r.metric;
        j["avg"] = to_json(r.value.mean);
        j["sd"] = to_json(r.value.sd);
        j["n"] = r.value.n;
        arr.push_back(std::move(j));
    }
    return arr;
}

Json to_json(const evaluation::ConceptRow& row, const taxonomy::Taxonomy* taxonomy) {
    Json j;
    j["code"] = row.code.str();
    if (taxonomy) {
        const auto* node = taxonomy->find(row.code);
        j["label"] = node ? node->canonical_label : row.code.str();
    }
    j["counts"] = to_json(row.counts);
    j["metrics"] = to_json(row.metrics);
    j["pct_correct"] = to_json(row.pct_correct);
    return j;
}

Json to_json(const evaluation::GroupTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json j;
        j["group"] = r.group;
        j["correct"] = r.correct;
        j["incorrect"] = r.incorrect;
        j["pct_correct"] = to_json(r.pct_correct);
        rows.push_back(std::move(j));
    }
    Json j;
    j["rows"] = std::move(rows);
    j["sum_correct"] = t.sum_correct;
    j["sum_incorrect"] = t.sum_incorrect;
    j["pooled_pct"] = to_json(t.pooled_pct);
    j["sd_pct"] = to_json(t.sd_pct);
    return j;
}

Json to_json(const fairness::WilcoxonResult& r) {
    Json j;
    j["n_effective"] = r.n_effective;
    j["w_plus"] = r.w_plus;
    j["w_minus"] = r.w_minus;
    j["w"] = r.w;
    j["z"] = to_json(r.z);
    j["p_value"] = r.p_value;
    j["method"] = fairness::to_string(r.method);
    return j;
}

Json to_json(const fairness::Comparison& c) {
    auto stats = [](const fairness::GroupStats& s) {
        Json j;
        j["median"] = to_json(s.median);
        j["sd"] = to_json(s.sd);
        return j;
    };
    Json j;
    j["group_a"] = c.label_a;
    j["group_b"] = c.label_b;
    Json concepts = Json::array();
    for (const auto& code : c.concepts) concepts.push_back(code.str());
    j["concepts"] = std::move(concepts);
    j["summary_a"] = stats(c.a);
    j["summary_b"] = stats(c.b);
    j["no_difference"] = c.no_difference;
    j["wilcoxon"] = c.test ? to_json(*c.test) : Json(nullptr);
    j["p_value"] = c.p_value;
    return j;
}

Json to_json(const annotator::Prediction& p) {
    Json j;
    j["doc_id"] = p.sentence_id.doc_id;
    j["idx"] = p.sentence_id.index;
    j["model_version"] = p.model_version;
    Json concepts = Json::array();
    for (const auto& s : p.assigned) concepts.push_back(Json{{"code", s.code.str()}, {"score", s.score}});
    j["concepts"] = std::move(concepts);
    return j;
}

namespace {

Json node_json(const taxonomy::Taxonomy& t, const taxonomy::ConceptCode& code) {
    const auto& n = t.at(code);
    Json j;
    j["code"] = n.code.str();
    j["name"] = n.name;
    j["label"] = n.canonical_label;
    j["annotatable"] = n.annotatable;
    j["aliases"] = n.aliases;
    Json children = Json::array();
    for (const auto& c : n.children) children.push_back(node_json(t, c));
    j["children"] = std::move(children);
    return j;
}

}  // namespace

Json taxonomy_tree(const taxonomy::Taxonomy& t) {
    Json roots = Json::array();
    for (const auto& r : t.roots()) roots.push_back(node_json(t, r));
    Json j;
    j["version"] = t.version();
    j["concepts"] = std::move(roots);
    return j;
}

}  // namespace hfa::json_io
