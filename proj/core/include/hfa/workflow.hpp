#pragma once

#include "hfa/annotator.hpp"
#include "hfa/evaluation.hpp"
#include "hfa/fairness.hpp"
#include "hfa/taxonomy.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Verification store: an append-only event log (events.jsonl) plus one file
// per model version under models/. Timestamps are event sequence numbers.
namespace hfa::workflow {

using annotator::ScoredConcept;
using corpus::SentenceId;
using taxonomy::ConceptCode;

enum class TaskStatus { Pending, Done, Stale };
std::string_view to_string(TaskStatus status);

struct VerificationTask {
    std::string task_id;
    SentenceId sentence_id;
    std::string text;
    std::string batch_id;
    std::string group;
    std::vector<ScoredConcept> predicted;
    int model_version = 0;
    TaskStatus status = TaskStatus::Pending;
    std::uint64_t created_at = 0;
    bool operator==(const VerificationTask&) const = default;
};

enum class Decision { Correct, Incorrect };
std::string_view to_string(Decision decision);
Decision parse_decision(std::string_view s);

struct Verdict {
    std::string task_id;
    std::string annotator_id;
    std::map<ConceptCode, Decision> decisions;
    std::set<ConceptCode> added;
    std::uint64_t submitted_at = 0;  // assigned by the store
    bool operator==(const Verdict&) const = default;
};

struct ModelVersion {
    int version = 0;
    std::string model_file;  // relative to the store directory
    std::vector<std::string> training_batches;
    std::uint64_t created_at = 0;
    bool operator==(const ModelVersion&) const = default;
};

struct MonitoringSnapshot {
    int model_version = 0;
    std::string batch_id;
    evaluation::ConfusionCounts overall_counts;
    evaluation::MetricsReport overall;
    std::vector<evaluation::MetricSummaryRow> per_sentence;
    std::vector<evaluation::ConceptRow> per_concept;
    evaluation::GroupTable per_group;
    fairness::GroupConceptTable per_group_concept;
    /// Tasks with a verdict / tasks created for (version, batch).
    double coverage = 0.0;
    std::uint64_t created_at = 0;
};

/// A prediction to enqueue, with the sentence text and its report's group.
struct PredictedSentence {
    annotator::Prediction prediction;
    std::string text;
    std::string group;
};

struct EnqueueResult {
    std::size_t created = 0;
    std::size_t skipped = 0;    // empty predictions
    std::size_t duplicate = 0;  // (sentence, version) already seen
};

struct RecordResult {
    VerificationTask task;
    annotator::TrainingExample example;
};

/// Not thread-safe; callers serialize writers (the HTTP server holds a lock).
class Store {
public:
    /// Creates the directory when missing and replays events.jsonl.
    /// Throws CorruptStore positioned at the 1-based bad line.
    static Store open(const std::filesystem::path& dir, taxonomy::Taxonomy taxonomy);

    const std::filesystem::path& dir() const { return dir_; }
    const taxonomy::Taxonomy& taxonomy() const { return taxonomy_; }

    /// Model version must be latest + 1 (or 1 for an empty store).
    ModelVersion register_model(const annotator::AnnotationModel& model, std::vector<std::string> training_batches);
    std::optional<int> latest_version() const;
    const std::vector<ModelVersion>& model_versions() const { return models_; }
    /// Throws UnknownModelVersion.
    annotator::AnnotationModel load_model(int version) const;

    /// One task per (sentence, version) with a non-empty prediction.
    /// Throws UnknownModelVersion.
    EnqueueResult enqueue_predictions(const std::vector<PredictedSentence>& predictions, const std::string& batch_id);

    /// Oldest pending or stale task this annotator has not judged.
    std::optional<VerificationTask> next_task(const std::string& annotator_id) const;

    /// Throws UnknownTask, IncompleteDecisions or InvalidVerdict.
    RecordResult record_verdict(Verdict verdict);

    /// Retrains the latest model on verdicts recorded since it was
    /// registered; earlier-version open tasks become stale. Throws NoNewVerdicts.
    ModelVersion trigger_retrain();

    /// Gold = latest verdict per task (correct ∪ added). Throws
    /// UnknownModelVersion or NoVerdictsForBatch.
    MonitoringSnapshot snapshot_metrics(int version, const std::string& batch_id);

    fairness::Comparison fairness(int version, const std::string& batch_id, const std::string& group_a,
                                  const std::string& group_b, const fairness::WilcoxonConfig& config = {});

    const std::vector<VerificationTask>& tasks() const { return tasks_; }
    const VerificationTask* task(const std::string& task_id) const;
    const std::vector<Verdict>& verdicts() const { return verdicts_; }
    std::size_t skipped() const { return skipped_.size(); }
    std::size_t snapshot_count() const;
    std::uint64_t sequence() const { return seq_; }

    /// Rewrites events.jsonl atomically in canonical form (temp file + rename).
    void compact();

    /// Canonical dump of the replayed state (used to check replay determinism).
    std::string state_json() const;

private:
    Store(std::filesystem::path dir, taxonomy::Taxonomy taxonomy);

    void apply(const nlohmann::ordered_json& event);
    void append(nlohmann::ordered_json event);
    annotator::TrainingExample derive_example(const VerificationTask& task, const Verdict& verdict) const;

    std::filesystem::path dir_;
    taxonomy::Taxonomy taxonomy_;
    std::uint64_t seq_ = 0;
    std::uint64_t task_counter_ = 0;
    std::vector<ModelVersion> models_;
    std::vector<VerificationTask> tasks_;
    std::map<std::string, std::size_t> task_index_;
    std::set<std::pair<SentenceId, int>> seen_;  // (sentence, version) with a task or skip
    std::vector<std::pair<SentenceId, int>> skipped_;
    std::vector<Verdict> verdicts_;
    std::uint64_t last_model_seq_ = 0;
    /// (version, batch) -> {created_at, body} in creation order.
    std::map<std::pair<int, std::string>, std::vector<nlohmann::ordered_json>> snapshots_;
};

nlohmann::ordered_json to_json(const VerificationTask& task);
nlohmann::ordered_json to_json(const Verdict& verdict);
nlohmann::ordered_json to_json(const ModelVersion& version);
nlohmann::ordered_json to_json(const MonitoringSnapshot& snapshot, const taxonomy::Taxonomy& taxonomy);

/// Parses an API verdict body {annotator_id, decisions:{code: correct|incorrect}, added:[codes]}.
/// Codes may be labels. Throws InvalidVerdict.
Verdict verdict_from_json(const nlohmann::json& body, const std::string& task_id, const taxonomy::Taxonomy& taxonomy);

}  // namespace hfa::workflow
