#pragma once

#include "hfa/corpus.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hfa::selection {

enum class MatchMode { Token, Phrase };

struct Lexicon {
    std::string name;
    std::set<std::string> entries;  // lowercase, trimmed
    MatchMode match_mode = MatchMode::Phrase;

    /// One phrase per line, `#` comments; a `# mode: token` line switches the
    /// match mode. Token-mode lexicons reject multi-word entries.
    static Lexicon parse(std::string name, std::string_view content);
};

Lexicon load_lexicon(const std::filesystem::path& path);

/// physical_characteristics and medications from the data directory.
std::vector<Lexicon> default_lexicons();

struct NegationConfig {
    std::vector<std::string> cues;
    std::vector<std::string> affirmation_phrases;
    static NegationConfig defaults();
};

/// Half-open range of word-token indices.
struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    bool operator==(const TokenRange&) const = default;
};

struct NegationCue {
    std::string phrase;
    std::size_t token_index = 0;
    bool affirmed = false;  // suppressed by an affirmation scope
};

struct NegationResult {
    bool negated = false;
    /// Every cue occurrence, leftmost-longest and non-overlapping.
    std::vector<NegationCue> cues;
};

/// Each affirmation phrase opens a scope running to the last token before the
/// next comma, semicolon or the end of the sentence.
std::vector<TokenRange> affirmation_scope(std::string_view sentence,
                                          const NegationConfig& config = NegationConfig::defaults());

/// A sentence is negated when at least one cue lies outside every affirmation scope.
NegationResult detect_negation(std::string_view sentence, const NegationConfig& config = NegationConfig::defaults());

struct SelectionFlags {
    corpus::SentenceId sentence_id;
    bool negated = false;
    /// Cues were present but every one was inside an affirmation scope.
    bool affirmed_override = false;
    std::map<std::string, std::vector<std::string>> lexicon_hits;
    bool selected = false;
};

/// Matched lexicon entries per lexicon name (empty lexicons omitted).
std::map<std::string, std::vector<std::string>> lexicon_hits(std::string_view sentence,
                                                             const std::vector<Lexicon>& lexicons);

/// One flag record per input sentence, in input order.
std::vector<SelectionFlags> select_batch(const std::vector<corpus::Sentence>& sentences,
                                         const std::vector<Lexicon>& lexicons,
                                         const NegationConfig& config = NegationConfig::defaults());

/// `doc_id,idx,negated,affirmed_override,lexicon_hits,selected`
std::string flags_to_csv(const std::vector<SelectionFlags>& flags);

}  // namespace hfa::selection
