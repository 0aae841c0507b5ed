#include "hfa/selection.hpp"

#include "hfa/csv.hpp"
#include "hfa/data_paths.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <algorithm>

namespace hfa::selection {

namespace {

struct SentenceTokens {
    std::vector<std::string> words;       // lowercase
    std::vector<bool> boundary_after;     // comma/semicolon between word i and i+1
};

SentenceTokens tokenize(std::string_view sentence) {
    SentenceTokens out;
    const auto tokens = text::word_tokens(sentence);
    out.words.reserve(tokens.size());
    out.boundary_after.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.words.push_back(text::to_lower_ascii(tokens[i].text));
        const auto gap_end = i + 1 < tokens.size() ? tokens[i + 1].begin : sentence.size();
        const auto gap = sentence.substr(tokens[i].end, gap_end - tokens[i].end);
        out.boundary_after.push_back(gap.find_first_of(",;") != std::string_view::npos);
    }
    return out;
}

std::vector<std::string> phrase_words(std::string_view phrase) {
    std::vector<std::string> out;
    for (const auto& t : text::word_tokens(phrase)) out.push_back(text::to_lower_ascii(t.text));
    return out;
}

bool matches_at(const std::vector<std::string>& words, std::size_t at, const std::vector<std::string>& phrase) {
    if (phrase.empty() || at + phrase.size() > words.size()) return false;
    return std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(at));
}

std::vector<TokenRange> scopes_for(const SentenceTokens& st, const NegationConfig& config) {
    std::vector<std::vector<std::string>> phrases;
    for (const auto& p : config.affirmation_phrases) phrases.push_back(phrase_words(p));
    std::vector<TokenRange> scopes;
    for (std::size_t i = 0; i < st.words.size(); ++i) {
        for (const auto& p : phrases) {
            if (!matches_at(st.words, i, p)) continue;
            std::size_t end = i;
            while (end < st.words.size()) {
                const bool boundary = st.boundary_after[end];
                ++end;
                if (boundary) break;
            }
            end = std::max(end, i + p.size());
            if (!scopes.empty() && scopes.back().end >= end) break;  // nested in the previous scope
            scopes.push_back({i, end});
            break;
        }
    }
    return scopes;
}

}  // namespace

// ---------------------------------------------------------------------------

Lexicon Lexicon::parse(std::string name, std::string_view content) {
    Lexicon lex;
    lex.name = std::move(name);
    for (const auto& raw : text::split(content, '\n')) {
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto body = text::to_lower_ascii(text::trim(line.substr(1)));
            if (body == "mode: token") lex.match_mode = MatchMode::Token;
            if (body == "mode: phrase") lex.match_mode = MatchMode::Phrase;
            continue;
        }
        auto entry = text::to_lower_ascii(line);
        const auto words = phrase_words(entry);
        if (words.empty()) continue;
        if (lex.match_mode == MatchMode::Token && words.size() != 1) {
            throw Error(ErrorCode::InvalidArgument, "token lexicon '" + lex.name + "' has multi-word entry '" + entry + "'");
        }
        lex.entries.insert(std::move(entry));
    }
    if (lex.entries.empty()) throw Error(ErrorCode::InvalidArgument, "lexicon '" + lex.name + "' has no entries");
    return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    return Lexicon::parse(path.stem().string(), text::read_file(path));
}

std::vector<Lexicon> default_lexicons() {
    return {load_lexicon(data_file("lexicons/physical_characteristics.txt")),
            load_lexicon(data_file("lexicons/medications.txt"))};
}

NegationConfig NegationConfig::defaults() {
    return NegationConfig{
        {"not", "never", "no", "without", "failed to", "did not", "was not", "were not", "unable to"},
        {"in line with"},
    };
}

std::vector<TokenRange> affirmation_scope(std::string_view sentence, const NegationConfig& config) {
    return scopes_for(tokenize(sentence), config);
}

NegationResult detect_negation(std::string_view sentence, const NegationConfig& config) {
    const auto st = tokenize(sentence);
    const auto scopes = scopes_for(st, config);

    std::vector<std::pair<std::string, std::vector<std::string>>> cues;
    for (const auto& c : config.cues) cues.emplace_back(text::to_lower_ascii(text::trim(c)), phrase_words(c));
    // Longest cue wins at each position ("was not" over "not").
    std::stable_sort(cues.begin(), cues.end(),
                     [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });

    NegationResult result;
    std::size_t i = 0;
    while (i < st.words.size()) {
        const auto hit = std::find_if(cues.begin(), cues.end(), [&](const auto& c) { return matches_at(st.words, i, c.second); });
        if (hit == cues.end()) {
            ++i;
            continue;
        }
        const bool affirmed = std::any_of(scopes.begin(), scopes.end(), [&](const TokenRange& r) { return r.contains(i); });
        result.cues.push_back({hit->first, i, affirmed});
        if (!affirmed) result.negated = true;
        i += hit->second.size();
    }
    return result;
}

std::map<std::string, std::vector<std::string>> lexicon_hits(std::string_view sentence,
                                                             const std::vector<Lexicon>& lexicons) {
    const auto st = tokenize(sentence);
    std::map<std::string, std::vector<std::string>> hits;
    for (const auto& lex : lexicons) {
        std::vector<std::string> found;
        for (const auto& entry : lex.entries) {
            const auto words = phrase_words(entry);
            for (std::size_t i = 0; i < st.words.size(); ++i) {
                if (matches_at(st.words, i, words)) {
                    found.push_back(entry);
                    break;
                }
            }
        }
        if (!found.empty()) hits.emplace(lex.name, std::move(found));
    }
    return hits;
}

std::vector<SelectionFlags> select_batch(const std::vector<corpus::Sentence>& sentences,
                                         const std::vector<Lexicon>& lexicons, const NegationConfig& config) {
    std::vector<SelectionFlags> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        SelectionFlags f;
        f.sentence_id = s.id;
        const auto neg = detect_negation(s.text, config);
        f.negated = neg.negated;
        f.affirmed_override = !neg.cues.empty() && !neg.negated;
        f.lexicon_hits = lexicon_hits(s.text, lexicons);
        f.selected = (f.negated && !f.affirmed_override) || !f.lexicon_hits.empty();
        out.push_back(std::move(f));
    }
    return out;
}

std::string flags_to_csv(const std::vector<SelectionFlags>& flags) {
    std::string out = csv::format_row({"doc_id", "idx", "negated", "affirmed_override", "lexicon_hits", "selected"});
    for (const auto& f : flags) {
        std::vector<std::string> hits;
        for (const auto& [lex, entries] : f.lexicon_hits) {
            for (const auto& e : entries) hits.push_back(lex + ":" + e);
        }
        out += csv::format_row({f.sentence_id.doc_id, std::to_string(f.sentence_id.index), f.negated ? "true" : "false",
                                f.affirmed_override ? "true" : "false", text::join(hits, "|"),
                                f.selected ? "true" : "false"});
    }
    return out;
}

}  // namespace hfa::selection
