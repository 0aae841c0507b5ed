#include "hfa/corpus.hpp"

#include "hfa/csv.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>

namespace hfa::corpus {

namespace {

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\v': case U'\f':
        case 0x00A0: case 0x1680: case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_latin_letter(char32_t cp) {
    if (cp >= 0x00C0 && cp <= 0x00FF) return cp != 0x00D7 && cp != 0x00F7;
    return cp >= 0x0100 && cp <= 0x017F;
}

bool is_ascii_alnum(char32_t cp) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
}

// Splits the normalized body into paragraph spans ("\n\n" separated).
std::vector<CharSpan> paragraphs(std::string_view body, CharSpan within) {
    std::vector<CharSpan> out;
    std::size_t start = within.begin;
    while (start < within.end) {
        auto stop = body.find("\n\n", start);
        if (stop == std::string_view::npos || stop > within.end) stop = within.end;
        std::size_t b = start;
        std::size_t e = stop;
        while (b < e && std::isspace(static_cast<unsigned char>(body[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(body[e - 1]))) --e;
        if (b < e) out.push_back({b, e});
        start = stop + 2;
    }
    return out;
}

std::optional<int> parse_year(const std::string& s) {
    const auto t = text::trim(s);
    if (t.empty()) return std::nullopt;
    int value = 0;
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw Error(ErrorCode::MetadataParse, "year is not an integer: " + s);
    return value;
}

}  // namespace

// ---------------------------------------------------------------------------

NormalizeConfig NormalizeConfig::defaults() {
    NormalizeConfig c;
    for (char32_t cp : {0x2018, 0x2019, 0x201A, 0x201B, 0x2032, 0x00B4}) c.replacements[cp] = "'";
    for (char32_t cp : {0x2010, 0x2011, 0x2012, 0x2013, 0x2014, 0x2212}) c.replacements[cp] = "-";
    c.replacements[0x2026] = "...";
    c.strip_set = {U'`', U'"', 0x201C, 0x201D, 0x201E, 0x201F, 0x00AB, 0x00BB};
    c.allowed_punctuation = U".,;:!?'()[]-/%&+=<>@#*_~£$€°";
    return c;
}

std::string normalize_text(std::string_view raw, const NormalizeConfig& config) {
    const auto cps = text::decode_utf8(raw);

    // Pass 1: map every code point to kept text, a space, a newline, or nothing.
    std::string mapped;
    mapped.reserve(raw.size());
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t cp = cps[i];
        if (cp == U'\r') {
            if (i + 1 < cps.size() && cps[i + 1] == U'\n') continue;
            cp = U'\n';
        }
        if (cp == U'\n') {
            mapped.push_back('\n');
            continue;
        }
        if (auto it = config.replacements.find(cp); it != config.replacements.end()) {
            mapped += it->second;
            continue;
        }
        if (config.strip_set.contains(cp) || is_space_cp(cp)) {
            mapped.push_back(' ');
            continue;
        }
        const bool allowed = is_ascii_alnum(cp) ||
                             (config.allow_latin_letters && is_latin_letter(cp)) ||
                             config.allowed_punctuation.find(cp) != std::u32string::npos;
        if (allowed) text::append_utf8(mapped, cp);
    }

    // Pass 2: blank lines delimit paragraphs; all other whitespace collapses.
    std::vector<std::string> paras;
    std::string current;
    bool pending_space = false;
    const auto flush = [&] {
        if (!current.empty()) paras.push_back(std::move(current));
        current.clear();
        pending_space = false;
    };
    for (const auto& line : text::split(mapped, '\n')) {
        const auto t = text::trim(line);
        if (t.empty()) {
            flush();
            continue;
        }
        for (char c : t) {
            if (c == ' ') {
                pending_space = true;
                continue;
            }
            if (pending_space && !current.empty()) current.push_back(' ');
            pending_space = false;
            current.push_back(c);
        }
        pending_space = true;  // line break inside a paragraph
    }
    flush();
    return text::join(paras, "\n\n");
}

// ---------------------------------------------------------------------------

std::string to_string(const SentenceId& id) { return id.doc_id + "#" + std::to_string(id.index); }

SectionConfig SectionConfig::defaults() {
    return SectionConfig{{
        // Numbered or plain title-case headings without sentence punctuation.
        R"(^(\d+(\.\d+)*\.?\s+)?[A-Z][A-Za-z0-9 ,'&/()\-]{0,60}$)",
    }};
}

SegmenterConfig SegmenterConfig::defaults() {
    return SegmenterConfig{{"dr.", "e.g.", "i.e.", "mr.", "mrs.", "ms.", "etc.", "vs.", "no.", "approx.",
                            "fig.", "st.", "prof.", "cf."}};
}

std::vector<Section> detect_sections(std::string_view body, const SectionConfig& config) {
    std::vector<std::regex> patterns;
    patterns.reserve(config.heading_patterns.size());
    for (const auto& p : config.heading_patterns) patterns.emplace_back(p, std::regex::ECMAScript);

    struct Heading {
        CharSpan span;
        std::string title;
    };
    std::vector<Heading> headings;
    for (const auto& para : paragraphs(body, {0, body.size()})) {
        const std::string s(body.substr(para.begin, para.length()));
        for (const auto& re : patterns) {
            if (std::regex_match(s, re)) {
                headings.push_back({para, s});
                break;
            }
        }
    }

    std::vector<Section> sections;
    if (headings.empty()) {
        sections.push_back({"", {0, body.size()}});
        return sections;
    }
    if (!paragraphs(body, {0, headings.front().span.begin}).empty()) {
        sections.push_back({"", {0, headings.front().span.begin}});
    }
    for (std::size_t i = 0; i < headings.size(); ++i) {
        const auto begin = headings[i].span.end;
        const auto end = i + 1 < headings.size() ? headings[i + 1].span.begin : body.size();
        sections.push_back({headings[i].title, {begin, end}});
    }
    return sections;
}

Document make_document(std::string doc_id, std::string source_path, std::string normalized_body,
                       const SectionConfig& config) {
    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.source_path = std::move(source_path);
    doc.body = std::move(normalized_body);
    doc.sections = detect_sections(doc.body, config);
    return doc;
}

std::vector<Sentence> segment_sentences(const Document& doc, const SegmenterConfig& config) {
    std::vector<std::string> abbreviations;
    for (const auto& a : config.abbreviations) abbreviations.push_back(text::to_lower_ascii(a));

    const std::string_view body = doc.body;
    std::vector<Sentence> out;
    const auto emit = [&](const Section& section, std::size_t b, std::size_t e) {
        while (b < e && std::isspace(static_cast<unsigned char>(body[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(body[e - 1]))) --e;
        if (b >= e) return;
        out.push_back({{doc.doc_id, out.size()}, section.title, std::string(body.substr(b, e - b)), {b, e}});
    };

    const auto is_abbreviation = [&](std::size_t dot) {
        std::size_t start = dot;
        while (start > 0 && !std::isspace(static_cast<unsigned char>(body[start - 1]))) --start;
        const auto word = text::to_lower_ascii(body.substr(start, dot + 1 - start));
        return std::find(abbreviations.begin(), abbreviations.end(), word) != abbreviations.end();
    };

    for (const auto& section : doc.sections) {
        for (const auto& para : paragraphs(body, section.span)) {
            std::size_t start = para.begin;
            for (std::size_t i = para.begin; i < para.end; ++i) {
                const char c = body[i];
                if (c != '.' && c != '?' && c != '!') continue;
                std::size_t j = i + 1;
                while (j < para.end && (body[j] == ')' || body[j] == ']' || body[j] == '\'')) ++j;
                if (j >= para.end || body[j] != ' ') continue;
                std::size_t k = j;
                while (k < para.end && body[k] == ' ') ++k;
                if (k >= para.end) continue;
                std::size_t m = k;
                while (m < para.end && (body[m] == '(' || body[m] == '[' || body[m] == '\'')) ++m;
                if (m >= para.end) continue;
                const auto next = static_cast<unsigned char>(body[m]);
                if (!std::isupper(next) && !std::isdigit(next)) continue;
                if (c == '.' && is_abbreviation(i)) continue;
                emit(section, start, j);
                start = k;
                i = k - 1;
            }
            emit(section, start, para.end);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

MetadataVocabulary MetadataVocabulary::defaults() {
    return MetadataVocabulary{
        {"Asian", "Black", std::string(kDataNotReceived), "Mixed Background", "White Other", "Other White",
         "White British"},
        {"TH", "NND", "MD", "Stillbirth"},
    };
}

std::string_view to_string(BatchKind kind) { return kind == BatchKind::Real ? "real" : "synthetic"; }

BatchKind parse_batch_kind(std::string_view s) {
    const auto t = text::to_lower_ascii(text::trim(s));
    if (t == "real") return BatchKind::Real;
    if (t == "synthetic") return BatchKind::Synthetic;
    throw Error(ErrorCode::MetadataParse, "unknown batch kind '" + std::string(s) + "'");
}

std::vector<CaseMetadata> parse_metadata_csv(std::string_view content, const MetadataVocabulary& vocabulary) {
    const auto table = csv::Table::parse(content);
    if (!table.has_columns({"doc_id", "ethnic_group", "outcome", "year"})) {
        throw PositionedError(ErrorCode::MetadataParse, 0, "metadata header must be doc_id,ethnic_group,outcome,year");
    }
    std::vector<CaseMetadata> rows;
    std::set<std::string, std::less<>> seen;
    for (std::size_t r = 0; r < table.size(); ++r) {
        const std::size_t row_no = r + 1;
        CaseMetadata m;
        m.doc_id = std::string(text::trim(table.get(r, "doc_id")));
        if (m.doc_id.empty()) throw PositionedError(ErrorCode::MetadataParse, row_no, "empty doc_id");
        if (!seen.insert(m.doc_id).second) {
            throw PositionedError(ErrorCode::MetadataParse, row_no, "duplicate metadata row for " + m.doc_id);
        }
        const std::string group(text::trim(table.get(r, "ethnic_group")));
        if (!group.empty()) {
            if (!vocabulary.ethnic_groups.contains(group)) {
                throw PositionedError(ErrorCode::MetadataParse, row_no, "unknown ethnic group '" + group + "'");
            }
            m.ethnic_group = group;
        }
        const std::string outcome(text::trim(table.get(r, "outcome")));
        if (!outcome.empty()) {
            if (!vocabulary.outcomes.contains(outcome)) {
                throw PositionedError(ErrorCode::MetadataParse, row_no, "unknown outcome '" + outcome + "'");
            }
            m.outcome = outcome;
        }
        try {
            m.year = parse_year(table.get(r, "year"));
        } catch (const Error& e) {
            throw PositionedError(ErrorCode::MetadataParse, row_no, e.what());
        }
        rows.push_back(std::move(m));
    }
    return rows;
}

std::vector<Batch> parse_batches_csv(std::string_view content) {
    const auto table = csv::Table::parse(content);
    if (!table.has_columns({"batch_id", "doc_id", "kind"})) {
        throw PositionedError(ErrorCode::MetadataParse, 0, "batches header must be batch_id,doc_id,kind");
    }
    std::vector<Batch> batches;
    for (std::size_t r = 0; r < table.size(); ++r) {
        const std::string id(text::trim(table.get(r, "batch_id")));
        const std::string doc(text::trim(table.get(r, "doc_id")));
        if (id.empty() || doc.empty()) throw PositionedError(ErrorCode::MetadataParse, r + 1, "empty batch_id or doc_id");
        BatchKind kind;
        try {
            kind = parse_batch_kind(table.get(r, "kind"));
        } catch (const Error& e) {
            throw PositionedError(ErrorCode::MetadataParse, r + 1, e.what());
        }
        auto it = std::find_if(batches.begin(), batches.end(), [&](const Batch& b) { return b.batch_id == id; });
        if (it == batches.end()) {
            batches.push_back({id, {}, kind});
            it = std::prev(batches.end());
        } else if (it->kind != kind) {
            throw PositionedError(ErrorCode::MetadataParse, r + 1, "batch " + id + " mixes kinds");
        }
        if (std::find(it->doc_ids.begin(), it->doc_ids.end(), doc) == it->doc_ids.end()) it->doc_ids.push_back(doc);
    }
    return batches;
}

// ---------------------------------------------------------------------------

Corpus Corpus::build(std::vector<Document> documents, std::vector<CaseMetadata> metadata, std::vector<Batch> batches,
                     const SegmenterConfig& segmenter) {
    Corpus c;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (!c.doc_index_.emplace(documents[i].doc_id, i).second) {
            throw Error(ErrorCode::DuplicateDocId, "duplicate doc_id '" + documents[i].doc_id + "'");
        }
    }
    for (auto& m : metadata) {
        auto it = c.doc_index_.find(m.doc_id);
        if (it == c.doc_index_.end()) {
            c.warnings_.push_back("metadata row references unknown document '" + m.doc_id + "'");
            continue;
        }
        if (m.year) documents[it->second].year = m.year;
        c.metadata_.emplace(m.doc_id, std::move(m));
    }
    for (const auto& b : batches) {
        if (std::count_if(batches.begin(), batches.end(), [&](const Batch& o) { return o.batch_id == b.batch_id; }) > 1) {
            throw Error(ErrorCode::MetadataParse, "duplicate batch_id '" + b.batch_id + "'");
        }
        for (const auto& d : b.doc_ids) {
            if (!c.doc_index_.contains(d)) {
                throw Error(ErrorCode::UnknownDocument, "batch " + b.batch_id + " references unknown document '" + d + "'");
            }
        }
    }
    c.batches_ = std::move(batches);
    c.documents_ = std::move(documents);
    for (const auto& d : c.documents_) {
        auto sentences = segment_sentences(d, segmenter);
        c.sentences_.insert(c.sentences_.end(), std::make_move_iterator(sentences.begin()),
                            std::make_move_iterator(sentences.end()));
    }
    return c;
}

const Document* Corpus::find(std::string_view doc_id) const {
    auto it = doc_index_.find(doc_id);
    return it == doc_index_.end() ? nullptr : &documents_[it->second];
}

const CaseMetadata* Corpus::metadata(std::string_view doc_id) const {
    auto it = metadata_.find(doc_id);
    return it == metadata_.end() ? nullptr : &it->second;
}

const Batch* Corpus::batch(std::string_view batch_id) const {
    for (const auto& b : batches_) {
        if (b.batch_id == batch_id) return &b;
    }
    return nullptr;
}

std::string Corpus::group_of(std::string_view doc_id) const {
    const auto* m = metadata(doc_id);
    if (m && m->ethnic_group) return *m->ethnic_group;
    return std::string(kDataNotReceived);
}

std::vector<std::string> Corpus::batches_of(std::string_view doc_id) const {
    std::vector<std::string> out;
    for (const auto& b : batches_) {
        if (std::find(b.doc_ids.begin(), b.doc_ids.end(), doc_id) != b.doc_ids.end()) out.push_back(b.batch_id);
    }
    return out;
}

std::vector<Sentence> Corpus::batch_sentences(std::string_view batch_id) const {
    std::vector<Sentence> out;
    const auto* b = batch(batch_id);
    if (!b) return out;
    for (const auto& doc_id : b->doc_ids) {
        for (const auto& s : sentences_) {
            if (s.id.doc_id == doc_id) out.push_back(s);
        }
    }
    return out;
}

std::string Corpus::to_jsonl() const {
    std::string out;
    for (const auto& s : sentences_) {
        nlohmann::ordered_json j;
        j["doc_id"] = s.id.doc_id;
        j["idx"] = s.id.index;
        j["section"] = s.section_title;
        j["text"] = s.text;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

Corpus load_corpus(const std::vector<std::filesystem::path>& files,
                   const std::optional<std::filesystem::path>& metadata_file,
                   const std::optional<std::filesystem::path>& batches_file, const CorpusConfig& config) {
    std::vector<Document> docs;
    docs.reserve(files.size());
    for (const auto& f : files) {
        auto body = normalize_text(text::read_file(f), config.normalize);
        docs.push_back(make_document(f.stem().string(), f.string(), std::move(body), config.sections));
    }
    std::vector<CaseMetadata> metadata;
    if (metadata_file) metadata = parse_metadata_csv(text::read_file(*metadata_file), config.vocabulary);
    std::vector<Batch> batches;
    if (batches_file) batches = parse_batches_csv(text::read_file(*batches_file));
    return Corpus::build(std::move(docs), std::move(metadata), std::move(batches), config.segmenter);
}

std::vector<Sentence> read_sentences_jsonl(std::string_view content) {
    std::vector<Sentence> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split(content, '\n')) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Sentence s;
            s.id.doc_id = j.at("doc_id").get<std::string>();
            s.id.index = j.at("idx").get<std::size_t>();
            s.section_title = j.value("section", std::string{});
            s.text = j.at("text").get<std::string>();
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw PositionedError(ErrorCode::InvalidArgument, line_no, std::string("bad sentence line: ") + e.what());
        }
    }
    return out;
}

}  // namespace hfa::corpus
