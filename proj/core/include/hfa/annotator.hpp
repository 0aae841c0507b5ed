#pragma once

#include "hfa/corpus.hpp"
#include "hfa/taxonomy.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Multi-label sentence annotator: TF-IDF sentence vectors, one unit-norm
// centroid per concept, and a per-concept cosine threshold calibrated to
// maximise in-sample F-score. Models are immutable, versioned snapshots;
// retraining always produces a new model.
namespace hfa::annotator {

using corpus::SentenceId;
using taxonomy::ConceptCode;

struct TokenizerConfig {
    bool lowercase = true;
    std::set<std::string> stopwords;
    std::size_t min_token_length = 2;

    /// Stopwords from the bundled stopwords.txt.
    static TokenizerConfig defaults();

    std::vector<std::string> tokenize(std::string_view text) const;
    bool operator==(const TokenizerConfig&) const = default;
};

/// Sparse vector with terms in ascending order.
struct SentenceVector {
    std::vector<std::pair<std::string, double>> weights;
    double norm = 0.0;

    bool is_zero() const { return norm == 0.0; }
    double dot(const SentenceVector& other) const;
    double weight(std::string_view term) const;
    bool operator==(const SentenceVector&) const = default;
};

/// Cosine similarity; 0 when either side is the zero vector.
double cosine(const SentenceVector& a, const SentenceVector& b);

enum class ExampleSource { Expert, Verdict };
std::string_view to_string(ExampleSource source);
ExampleSource parse_example_source(std::string_view s);

struct TrainingExample {
    SentenceId sentence_id;
    std::string text;
    std::set<ConceptCode> concepts;
    ExampleSource source = ExampleSource::Expert;
    std::string batch_id;
    bool operator==(const TrainingExample&) const = default;
};

struct ConceptPrototype {
    ConceptCode code;
    SentenceVector centroid;
    double threshold = 1.0;
    std::size_t support = 0;
    std::set<std::string> seed_terms;
    bool operator==(const ConceptPrototype&) const = default;
};

struct TrainingLogEntry {
    std::string batch_id;
    std::size_t example_count = 0;
    bool operator==(const TrainingLogEntry&) const = default;
};

struct TrainConfig {
    TokenizerConfig tokenizer = TokenizerConfig::defaults();
    /// Seed terms get this fraction of the largest centroid weight.
    double seed_weight_fraction = 0.1;
    /// Threshold grid is {step, 2*step, ..., 1}.
    double threshold_step = 0.05;
    bool operator==(const TrainConfig&) const = default;
};

/// Tolerance applied to every score-vs-threshold comparison.
inline constexpr double kThresholdTolerance = 1e-9;

struct ScoredConcept {
    ConceptCode code;
    double score = 0.0;
    bool operator==(const ScoredConcept&) const = default;
};

struct Prediction {
    SentenceId sentence_id;
    std::vector<ScoredConcept> assigned;  // code order
    int model_version = 0;
    bool operator==(const Prediction&) const = default;
};

/// Verdict example whose corrected concept the retrained model still misses.
struct CalibrationConflict {
    SentenceId sentence_id;
    ConceptCode code;
    bool operator==(const CalibrationConflict&) const = default;
};

class AnnotationModel {
public:
    AnnotationModel() = default;

    int version() const { return version_; }
    bool trained() const { return version_ > 0; }
    const TrainConfig& config() const { return config_; }
    const std::map<std::string, double, std::less<>>& idf() const { return idf_; }
    const std::map<ConceptCode, ConceptPrototype>& prototypes() const { return prototypes_; }
    const std::vector<TrainingLogEntry>& training_log() const { return training_log_; }
    const std::vector<TrainingExample>& examples() const { return examples_; }
    const std::vector<CalibrationConflict>& calibration_conflicts() const { return conflicts_; }
    std::vector<ConceptCode> concepts() const;

    /// tf x idf over in-vocabulary terms; all-OOV text gives the zero vector.
    SentenceVector featurize(std::string_view text) const;

    /// Throws UntrainedModel on a default-constructed model.
    Prediction predict(const SentenceId& id, std::string_view text) const;
    Prediction predict(std::string_view text) const { return predict({}, text); }

    bool operator==(const AnnotationModel&) const = default;

private:
    friend AnnotationModel train(const std::vector<TrainingExample>&, const taxonomy::Taxonomy&, const TrainConfig&,
                                 const std::string&);
    friend AnnotationModel calibrate_thresholds(AnnotationModel, const std::vector<TrainingExample>&);
    friend AnnotationModel update_with_verdicts(const AnnotationModel&, const std::vector<TrainingExample>&,
                                                const taxonomy::Taxonomy&, const std::string&);
    friend AnnotationModel model_from_json(std::string_view, std::size_t);
    friend std::string model_to_json(const AnnotationModel&);

    int version_ = 0;
    TrainConfig config_;
    std::map<std::string, double, std::less<>> idf_;
    std::map<ConceptCode, ConceptPrototype> prototypes_;
    std::vector<TrainingLogEntry> training_log_;
    std::vector<TrainingExample> examples_;
    std::vector<CalibrationConflict> conflicts_;
};

/// Builds model version 1. Examples with no concepts act as negatives only.
/// Throws EmptyTrainingSet (no labelled example) or UnresolvableConcept
/// (codes missing from the taxonomy or not annotatable).
AnnotationModel train(const std::vector<TrainingExample>& examples, const taxonomy::Taxonomy& taxonomy,
                      const TrainConfig& config = {}, const std::string& batch_id = "initial");

/// Per concept, picks the grid threshold maximising one-vs-rest F-score over
/// `examples`; ties go to the higher threshold.
AnnotationModel calibrate_thresholds(AnnotationModel model, const std::vector<TrainingExample>& examples);

/// Retrains on the model's examples plus `verdicts` (a verdict replaces any
/// earlier example for the same sentence). Version increments; one log entry
/// per verdict batch, or a single `batch_label` entry when `verdicts` is empty.
AnnotationModel update_with_verdicts(const AnnotationModel& model, const std::vector<TrainingExample>& verdicts,
                                     const taxonomy::Taxonomy& taxonomy, const std::string& batch_label = "");

std::string model_to_json(const AnnotationModel& model);
/// `file_size` only feeds the offset reported for truncated input.
AnnotationModel model_from_json(std::string_view content, std::size_t file_size = 0);

void save_model(const AnnotationModel& model, const std::filesystem::path& path);
/// Throws PositionedError(CorruptModelFile) with the byte offset of the damage.
AnnotationModel load_model(const std::filesystem::path& path);

// Training-set files: JSON Lines {doc_id, idx, text, concepts:[labels], source}.
std::vector<TrainingExample> read_training_jsonl(std::string_view content, const taxonomy::Taxonomy& taxonomy,
                                                 const std::string& batch_id = "");
std::string write_training_jsonl(const std::vector<TrainingExample>& examples, const taxonomy::Taxonomy& taxonomy);

}  // namespace hfa::annotator
