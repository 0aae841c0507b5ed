#pragma once

#include "hfa/annotator.hpp"
#include "hfa/evaluation.hpp"
#include "hfa/fairness.hpp"
#include "hfa/taxonomy.hpp"

#include <nlohmann/json.hpp>

// JSON renderings shared by the store, the HTTP API and the CLI. Key order
// is fixed so identical values always serialize to identical bytes.
namespace hfa::json_io {

using Json = nlohmann::ordered_json;

Json to_json(const std::optional<double>& value);
Json to_json(const evaluation::ConfusionCounts& counts);
Json to_json(const evaluation::MetricsReport& report);
Json to_json(const evaluation::MeanSd& value);
Json to_json(const std::vector<evaluation::MetricSummaryRow>& rows);
Json to_json(const evaluation::ConceptRow& row, const taxonomy::Taxonomy* taxonomy = nullptr);
Json to_json(const evaluation::GroupTable& table);
Json to_json(const fairness::WilcoxonResult& result);
Json to_json(const fairness::Comparison& comparison);
Json to_json(const annotator::Prediction& prediction);

/// Nested tree: {version, concepts:[{code, name, label, annotatable, aliases, children:[...]}]}.
Json taxonomy_tree(const taxonomy::Taxonomy& taxonomy);

}  // namespace hfa::json_io
