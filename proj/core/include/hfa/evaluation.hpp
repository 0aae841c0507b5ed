#pragma once

#include "hfa/corpus.hpp"
#include "hfa/taxonomy.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hfa::evaluation {

using corpus::SentenceId;
using taxonomy::ConceptCode;
using ConceptSet = std::set<ConceptCode>;
/// Sentence-level concept assignments; absent sentences mean the empty set.
using Annotations = std::map<SentenceId, ConceptSet>;

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

/// Throws ConceptOutsideUniverse unless predicted, actual ⊆ universe.
ConfusionCounts accumulate_confusion(const ConceptSet& predicted, const ConceptSet& actual, const ConceptSet& universe);

/// nullopt marks a zero denominator.
struct MetricsReport {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_score;
    std::optional<double> accuracy;
    std::optional<double> misclassification;
    std::optional<double> balanced_accuracy;
    std::optional<double> tpr;
    std::optional<double> tnr;
    bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const ConfusionCounts& counts);

/// "-" for undefined, otherwise fixed-point.
std::string render(const std::optional<double>& value, int decimals = 2);

struct MeanSd {
    std::optional<double> mean;
    std::optional<double> sd;  // sample SD; 0 for a single value
    std::size_t n = 0;
    bool operator==(const MeanSd&) const = default;
};
MeanSd mean_sd(const std::vector<double>& values);

/// Metric rows in report order: Precision, Recall, F-score,
/// Misclassification, Accuracy, Balanced Accuracy.
struct MetricSummaryRow {
    std::string metric;
    MeanSd value;
};

/// Every sentence in predicted ∪ gold is scored against `universe`; each
/// metric is averaged over the sentences where it is defined.
std::vector<MetricSummaryRow> per_sentence_summary(const Annotations& predicted, const Annotations& gold,
                                                   const ConceptSet& universe);

ConfusionCounts overall_counts(const Annotations& predicted, const Annotations& gold, const ConceptSet& universe);

struct ConceptRow {
    ConceptCode code;
    ConfusionCounts counts;
    MetricsReport metrics;
    /// tp/(tp+fn) x 100; nullopt when the concept never occurs in gold.
    std::optional<double> pct_correct;
};

/// One row per universe concept, code order.
std::vector<ConceptRow> per_concept_table(const Annotations& predicted, const Annotations& gold,
                                          const ConceptSet& universe);

using GroupLookup = std::function<std::string(const SentenceId&)>;

/// per_concept_table restricted to each group's sentences; groups sorted by name.
std::map<std::string, std::vector<ConceptRow>> per_group_concept_table(const Annotations& predicted,
                                                                       const Annotations& gold,
                                                                       const ConceptSet& universe,
                                                                       const GroupLookup& group_of);

struct GroupRow {
    std::string group;
    std::uint64_t correct = 0;    // gold instances predicted (tp)
    std::uint64_t incorrect = 0;  // gold instances missed (fn)
    std::optional<double> pct_correct;
};

struct GroupTable {
    std::vector<GroupRow> rows;  // sorted by group
    std::uint64_t sum_correct = 0;
    std::uint64_t sum_incorrect = 0;
    /// Pooled sum_correct / (sum_correct + sum_incorrect) x 100.
    std::optional<double> pooled_pct;
    /// Sample SD of the defined group percentages.
    std::optional<double> sd_pct;
};

GroupTable per_group_table(const Annotations& predicted, const Annotations& gold, const GroupLookup& group_of);

// ---------------------------------------------------------------------------
// Inter-rater reliability

/// annotator id -> annotations. Sentences missing for an annotator count as
/// empty sets.
using MultiAnnotatorSet = std::map<std::string, Annotations>;

enum class IrrMode {
    Union,    // agreements / distinct (sentence, concept) assignments
    Literal,  // agreements / (distinct assignments x annotator count)
};

struct IrrResult {
    double irr = 0.0;
    std::uint64_t agreements = 0;
    std::uint64_t total_concepts = 0;
    std::size_t annotators = 0;
};

/// Throws FewerThanTwoAnnotators. An empty assignment set scores irr 1.
IrrResult inter_rater_reliability(const MultiAnnotatorSet& set, IrrMode mode = IrrMode::Union);

/// Per document: sentences coded by each annotator and sentences on which all
/// annotators assigned the same non-empty set.
struct IrrDocumentRow {
    std::string doc_id;
    std::vector<std::size_t> coded;  // annotator order of the set
    std::size_t agreement = 0;
};
std::vector<IrrDocumentRow> irr_by_document(const MultiAnnotatorSet& set);

// ---------------------------------------------------------------------------
// Files

/// JSON Lines {doc_id, idx, concepts:[code or label]}; labels resolve through
/// the taxonomy (UnresolvableConcept otherwise). Duplicate lines merge.
Annotations read_annotations_jsonl(std::string_view content, const taxonomy::Taxonomy& taxonomy);
std::string write_annotations_jsonl(const Annotations& annotations);

/// metric,avg,sd
std::string summary_csv(const std::vector<MetricSummaryRow>& rows);
/// concept,<column>; trailing Average and SD rows over defined cells.
std::string concept_csv(const std::vector<ConceptRow>& rows, const taxonomy::Taxonomy& taxonomy,
                        const std::string& column);
/// concept,<group...>,Average,SD
std::string group_concept_csv(const std::map<std::string, std::vector<ConceptRow>>& table,
                              const taxonomy::Taxonomy& taxonomy);
/// ethnicity,correct,incorrect,correct_pct; trailing Total row.
std::string group_csv(const GroupTable& table);
/// report,<annotator...>,agreement
std::string irr_csv(const MultiAnnotatorSet& set);
/// Overall counts and metrics as metric,value.
std::string overall_csv(const ConfusionCounts& counts);

}  // namespace hfa::evaluation
