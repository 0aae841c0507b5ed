#pragma once

#include "hfa/annotator.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Synthetic-test tooling: count-based word embeddings, averaged sentence
// vectors, synonym paraphrasing and the cosine admission gate.
namespace hfa::synthtest {

struct EmbeddingConfig {
    annotator::TokenizerConfig tokenizer = annotator::TokenizerConfig::defaults();
    std::size_t window = 4;  // symmetric
    std::size_t min_count = 1;
    /// 0 keeps the full PPMI rows.
    std::size_t dimensions = 50;
    std::size_t power_iterations = 60;
    std::uint32_t seed = 20230917;
};

class EmbeddingModel {
public:
    std::size_t dimension() const { return dimension_; }
    const std::map<std::string, std::size_t, std::less<>>& vocabulary() const { return vocabulary_; }
    /// nullptr when out of vocabulary.
    const std::vector<double>* vector(std::string_view term) const;
    const EmbeddingConfig& config() const { return config_; }

private:
    friend EmbeddingModel train_embeddings(const std::vector<std::string>&, const EmbeddingConfig&);

    EmbeddingConfig config_;
    std::size_t dimension_ = 0;
    std::map<std::string, std::size_t, std::less<>> vocabulary_;
    std::vector<std::vector<double>> vectors_;
};

/// PPMI co-occurrence rows, reduced to `dimensions` by a seeded subspace
/// iteration when the vocabulary is larger. Throws EmptyCorpus.
EmbeddingModel train_embeddings(const std::vector<std::string>& sentences, const EmbeddingConfig& config = {});

/// Mean of in-vocabulary term vectors; all zeros when none are known.
std::vector<double> sentence_vector(const EmbeddingModel& model, std::string_view sentence);

/// nullopt when either vector is zero. Throws DimensionMismatch.
std::optional<double> cosine_similarity(const std::vector<double>& u, const std::vector<double>& v);

/// Terms most similar to `term`, best first.
std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingModel& model, std::string_view term,
                                                              std::size_t k);

// ---------------------------------------------------------------------------

/// term -> single-token replacements, all lowercase.
using SynonymTable = std::map<std::string, std::vector<std::string>, std::less<>>;

/// CSV `term,synonym1|synonym2`. Rejects self-synonyms and multi-token entries.
SynonymTable parse_synonyms_csv(std::string_view content);
SynonymTable default_synonyms();

struct ParaphraseConfig {
    double max_fraction = 0.2;
    std::uint32_t seed = 7;
    annotator::TokenizerConfig tokenizer = annotator::TokenizerConfig::defaults();
};

struct Paraphrase {
    std::string text;
    std::size_t substitutions = 0;
    bool unchanged = true;
};

/// Replaces up to max_fraction of the content tokens (at least one when any
/// is replaceable) in seeded random order, keeping initial capitals.
Paraphrase generate_paraphrase(std::string_view sentence, const SynonymTable& table,
                               const ParaphraseConfig& config = {});

// ---------------------------------------------------------------------------

struct SentencePair {
    std::string original;
    std::string synthetic;
};

struct PairSimilarity {
    std::string original;
    std::string synthetic;
    std::optional<double> cosine;
};

std::vector<PairSimilarity> score_pairs(const EmbeddingModel& model, const std::vector<SentencePair>& pairs);

inline constexpr double kGateBinWidth = 0.05;

struct GateReport {
    std::size_t pair_count = 0;
    double threshold = 0.8;
    /// 40 bins over [-1, 1]; bin i covers [-1 + i*w, -1 + (i+1)*w), the last is closed.
    std::vector<std::size_t> bins;
    std::size_t undefined = 0;
    std::size_t passed = 0;
    /// passed / defined pairs; nullopt when no pair is defined.
    std::optional<double> pass_fraction;
};

GateReport gate_report(const std::vector<PairSimilarity>& pairs, double threshold = 0.8);

/// CSV `original,synthetic`.
std::vector<SentencePair> read_pairs_csv(std::string_view content);
std::string write_pairs_csv(const std::vector<SentencePair>& pairs);
/// bin_low,bin_high,count rows, an undefined row, then a summary comment line.
std::string gate_report_csv(const GateReport& report);

}  // namespace hfa::synthtest
