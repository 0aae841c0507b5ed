#pragma once

#include "hfa/corpus.hpp"
#include "hfa/evaluation.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hfa::fairness {

using taxonomy::ConceptCode;

/// Matched observations; keys[i] names the pairing unit of pairs[i].
struct PairedSample {
    std::vector<std::string> keys;
    std::vector<std::pair<double, double>> pairs;
};

enum class WilcoxonMethod { Exact, NormalApproximation };
std::string_view to_string(WilcoxonMethod method);

struct WilcoxonConfig {
    /// Exact enumeration for tie-free samples with n_effective <= cutoff.
    std::size_t exact_cutoff = 12;
    bool continuity_correction = true;
};

struct WilcoxonResult {
    std::size_t n_effective = 0;
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w = 0.0;  // min(w_plus, w_minus)
    std::optional<double> z;
    double p_value = 1.0;  // two-sided
    WilcoxonMethod method = WilcoxonMethod::Exact;
};

/// d = y - x; zero differences dropped; mid-ranks for ties in |d|.
/// Throws EmptySample or AllZeroDifferences.
WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample, const WilcoxonConfig& config = {});

/// Two-sided exact p for W = min(W+, W-) over integer ranks 1..n.
double exact_p_value(std::size_t n, double w);

/// group -> concept -> %-correct (nullopt for "-").
using GroupConceptTable = std::map<std::string, std::map<ConceptCode, std::optional<double>>>;
GroupConceptTable to_group_concept_table(const std::map<std::string, std::vector<evaluation::ConceptRow>>& table);

struct GroupStats {
    std::optional<double> median;
    std::optional<double> sd;  // sample SD
};

struct Comparison {
    std::string label_a;
    std::string label_b;
    std::vector<ConceptCode> concepts;  // paired concepts, code order
    GroupStats a;
    GroupStats b;
    /// nullopt when every paired difference is zero.
    std::optional<WilcoxonResult> test;
    bool no_difference = false;
    double p_value = 1.0;
};

/// Pairs over concepts defined in both columns. Throws NoCommonConcepts.
/// All-zero differences yield no_difference with p = 1.
Comparison compare_columns(const std::map<ConceptCode, std::optional<double>>& a,
                           const std::map<ConceptCode, std::optional<double>>& b, const std::string& label_a,
                           const std::string& label_b, const WilcoxonConfig& config = {});

/// Throws NotFound for a missing group.
Comparison compare_groups(const GroupConceptTable& table, const std::string& group_a, const std::string& group_b,
                          const WilcoxonConfig& config = {});

/// Per group present in both tables: before vs after. Groups without common
/// concepts carry nullopt.
std::vector<std::pair<std::string, std::optional<Comparison>>> compare_versions(const GroupConceptTable& before,
                                                                               const GroupConceptTable& after,
                                                                               const WilcoxonConfig& config = {});

double median(std::vector<double> values);

// ---------------------------------------------------------------------------

struct DistributionRow {
    std::string group;
    std::uint64_t reports = 0;
    std::uint64_t concepts = 0;
    std::optional<std::uint64_t> avg_concepts;  // ceil(concepts / reports)
};

struct DistributionReport {
    std::vector<DistributionRow> rows;  // sorted by group
    DistributionRow total;
};

/// `doc_groups` maps every report to its group; concepts count every
/// (sentence, concept) assignment in `annotations` on those reports.
DistributionReport group_distribution_report(const std::map<std::string, std::string>& doc_groups,
                                             const evaluation::Annotations& annotations);
DistributionReport group_distribution_report(const corpus::Corpus& corpus, const evaluation::Annotations& annotations);

// ---------------------------------------------------------------------------

/// ethnicity,W,p
std::string versions_csv(const std::vector<std::pair<std::string, std::optional<Comparison>>>& rows);
/// Two-group comparison as key,value rows.
std::string comparison_csv(const Comparison& comparison);
/// ethnicity,reports,concepts,avg_concepts_per_report
std::string distribution_csv(const DistributionReport& report);

}  // namespace hfa::fairness
