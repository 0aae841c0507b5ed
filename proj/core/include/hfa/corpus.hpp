#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hfa::corpus {

// ---------------------------------------------------------------------------
// Normalization

struct NormalizeConfig {
    /// Code points rewritten to a fixed replacement (curly apostrophes -> ').
    std::map<char32_t, std::string> replacements;
    /// Code points removed; each becomes a space before whitespace collapsing.
    std::set<char32_t> strip_set;
    /// Punctuation kept in addition to letters and digits.
    std::u32string allowed_punctuation;
    /// Keep Latin-1 / Latin Extended-A letters (accented names).
    bool allow_latin_letters = true;

    static NormalizeConfig defaults();
};

/// Decodes, maps, strips, filters and collapses whitespace. Paragraph breaks
/// (one or more blank lines) survive as exactly "\n\n"; every other run of
/// whitespace becomes a single space. Idempotent.
std::string normalize_text(std::string_view raw, const NormalizeConfig& config = NormalizeConfig::defaults());

// ---------------------------------------------------------------------------
// Documents and sentences

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t length() const { return end - begin; }
    auto operator<=>(const CharSpan&) const = default;
};

struct Section {
    std::string title;  // empty for the implicit section
    CharSpan span;
};

struct Document {
    std::string doc_id;
    std::string source_path;
    std::optional<int> year;
    std::string body;
    std::vector<Section> sections;
};

struct SentenceId {
    std::string doc_id;
    std::size_t index = 0;
    auto operator<=>(const SentenceId&) const = default;
};

std::string to_string(const SentenceId& id);

struct Sentence {
    SentenceId id;
    std::string section_title;
    std::string text;
    CharSpan span;
};

struct SectionConfig {
    /// ECMAScript patterns matched against whole paragraphs.
    std::vector<std::string> heading_patterns;
    static SectionConfig defaults();
};

struct SegmenterConfig {
    /// Tokens ending in '.' that never end a sentence (case-insensitive).
    std::vector<std::string> abbreviations;
    static SegmenterConfig defaults();
};

std::vector<Section> detect_sections(std::string_view body, const SectionConfig& config = SectionConfig::defaults());

Document make_document(std::string doc_id, std::string source_path, std::string normalized_body,
                       const SectionConfig& config = SectionConfig::defaults());

std::vector<Sentence> segment_sentences(const Document& doc,
                                        const SegmenterConfig& config = SegmenterConfig::defaults());

// ---------------------------------------------------------------------------
// Metadata and batches

inline constexpr std::string_view kDataNotReceived = "Data not received";

struct CaseMetadata {
    std::string doc_id;
    std::optional<std::string> ethnic_group;
    std::optional<std::string> outcome;
    std::optional<int> year;
};

struct MetadataVocabulary {
    std::set<std::string> ethnic_groups;
    std::set<std::string> outcomes;
    static MetadataVocabulary defaults();
};

enum class BatchKind { Real, Synthetic };
std::string_view to_string(BatchKind kind);
BatchKind parse_batch_kind(std::string_view s);

struct Batch {
    std::string batch_id;
    std::vector<std::string> doc_ids;
    BatchKind kind = BatchKind::Real;
};

/// Parses `doc_id,ethnic_group,outcome,year`. Values outside the vocabulary
/// raise MetadataParse with the 1-based data row number.
std::vector<CaseMetadata> parse_metadata_csv(std::string_view content,
                                             const MetadataVocabulary& vocabulary = MetadataVocabulary::defaults());

/// Parses `batch_id,doc_id,kind`; batches keep first-appearance order.
std::vector<Batch> parse_batches_csv(std::string_view content);

// ---------------------------------------------------------------------------
// Corpus

struct CorpusConfig {
    NormalizeConfig normalize = NormalizeConfig::defaults();
    SectionConfig sections = SectionConfig::defaults();
    SegmenterConfig segmenter = SegmenterConfig::defaults();
    MetadataVocabulary vocabulary = MetadataVocabulary::defaults();
};

/// Immutable after construction.
class Corpus {
public:
    Corpus() = default;

    const std::vector<Document>& documents() const { return documents_; }
    const std::vector<Sentence>& sentences() const { return sentences_; }
    const std::vector<Batch>& batches() const { return batches_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    const Document* find(std::string_view doc_id) const;
    const CaseMetadata* metadata(std::string_view doc_id) const;
    const Batch* batch(std::string_view batch_id) const;

    /// Ethnic group for grouping; documents without one fall under "Data not received".
    std::string group_of(std::string_view doc_id) const;
    std::vector<std::string> batches_of(std::string_view doc_id) const;
    std::vector<Sentence> batch_sentences(std::string_view batch_id) const;

    /// One sentence per line: {"doc_id","idx","section","text"}.
    std::string to_jsonl() const;

    static Corpus build(std::vector<Document> documents, std::vector<CaseMetadata> metadata,
                        std::vector<Batch> batches, const SegmenterConfig& segmenter = SegmenterConfig::defaults());

private:
    std::vector<Document> documents_;
    std::vector<Sentence> sentences_;
    std::map<std::string, std::size_t, std::less<>> doc_index_;
    std::map<std::string, CaseMetadata, std::less<>> metadata_;
    std::vector<Batch> batches_;
    std::vector<std::string> warnings_;
};

Corpus load_corpus(const std::vector<std::filesystem::path>& files,
                   const std::optional<std::filesystem::path>& metadata_file = std::nullopt,
                   const std::optional<std::filesystem::path>& batches_file = std::nullopt,
                   const CorpusConfig& config = {});

/// Reads a corpus dump back (spans are not part of the dump and stay zero).
std::vector<Sentence> read_sentences_jsonl(std::string_view content);

}  // namespace hfa::corpus
