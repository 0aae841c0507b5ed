#pragma once

#include "hfa/annotator.hpp"
#include "hfa/evaluation.hpp"
#include "hfa/taxonomy.hpp"
#include "hfa/workflow.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hfa::fixtures {

std::filesystem::path fixture_path(const std::string& relative);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

const taxonomy::Taxonomy& bundled_taxonomy();

/// 20 sentences, 5 per concept, over 5.2, 3.6, 4.3 and 6.1.1.1.
std::vector<annotator::TrainingExample> toy_corpus();

/// 100 deterministic sentences built from the toy vocabulary.
std::vector<std::string> hundred_sentences();

struct LabelledSentence {
    std::string text;
    bool cue_outside_scope = false;
};

/// 50 sentences whose negation status is known by construction.
std::vector<LabelledSentence> selection_fixture();

/// The three sample sentences of the annotated-segments table; the last two
/// contain "in line with".
std::vector<std::string> sample_segments();

struct GroupCounts {
    std::string group;
    std::uint64_t correct = 0;
    std::uint64_t incorrect = 0;
};

/// Test A counts per ethnic group.
std::vector<GroupCounts> group_counts_test_a();

/// Predictions and gold reproducing `counts`: one sentence per gold instance,
/// predicted exactly when it counts as correct. Doc ids encode the group.
struct GroupFixture {
    evaluation::Annotations predicted;
    evaluation::Annotations gold;
    std::map<std::string, std::string> doc_groups;
};
GroupFixture group_fixture(const std::vector<GroupCounts>& counts);

/// Model version 1 trained on toy_corpus().
annotator::AnnotationModel toy_model();

/// Registers toy_model() when the store is empty, then enqueues one task per
/// gold instance of `counts` in `batch_id` and records a verdict for each:
/// correct instances predict 3.6 and are confirmed; missed ones predict 5.2,
/// reject it and add 3.6.
void populate_group_store(workflow::Store& store, const std::vector<GroupCounts>& counts, const std::string& batch_id);

struct DistributionCounts {
    std::string group;
    std::uint64_t reports = 0;
    std::uint64_t concepts = 0;
    std::uint64_t avg = 0;
};

/// Reports and concepts per ethnic group in the first training batch.
std::vector<DistributionCounts> distribution_counts();

/// Per-concept %-correct columns for the Black and White British groups
/// (24 concepts, nullopt where the concept did not appear).
std::vector<std::optional<double>> concept_column_black();
std::vector<std::optional<double>> concept_column_white_british();

}  // namespace hfa::fixtures
