#include "hfa/synthtest.hpp"

#include "hfa/csv.hpp"
#include "hfa/data_paths.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

namespace hfa::synthtest {

namespace {

// Uniform in [-0.5, 0.5) straight from the engine output, so the start block
// does not depend on the standard library's distribution algorithms.
double centered_uniform(std::mt19937& rng) { return static_cast<double>(rng()) / 4294967296.0 - 0.5; }

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

}  // namespace

const std::vector<double>* EmbeddingModel::vector(std::string_view term) const {
    auto it = vocabulary_.find(term);
    return it == vocabulary_.end() ? nullptr : &vectors_[it->second];
}

EmbeddingModel train_embeddings(const std::vector<std::string>& sentences, const EmbeddingConfig& config) {
    std::vector<std::vector<std::string>> tokenized;
    std::map<std::string, std::size_t, std::less<>> counts;
    for (const auto& s : sentences) {
        auto tokens = config.tokenizer.tokenize(s);
        for (const auto& t : tokens) ++counts[t];
        tokenized.push_back(std::move(tokens));
    }
    EmbeddingModel model;
    model.config_ = config;
    for (const auto& [term, n] : counts) {
        if (n >= config.min_count) model.vocabulary_.emplace(term, model.vocabulary_.size());
    }
    if (model.vocabulary_.empty()) throw Error(ErrorCode::EmptyCorpus, "no in-vocabulary tokens to train embeddings on");

    const auto v = static_cast<Eigen::Index>(model.vocabulary_.size());
    std::map<std::pair<Eigen::Index, Eigen::Index>, double> cooc;
    for (const auto& tokens : tokenized) {
        std::vector<Eigen::Index> ids;
        for (const auto& t : tokens) {
            if (auto it = model.vocabulary_.find(t); it != model.vocabulary_.end()) {
                ids.push_back(static_cast<Eigen::Index>(it->second));
            }
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = i + 1; j < ids.size() && j - i <= config.window; ++j) {
                cooc[{ids[i], ids[j]}] += 1.0;
                cooc[{ids[j], ids[i]}] += 1.0;
            }
        }
    }

    std::vector<double> row_sum(static_cast<std::size_t>(v), 0.0);
    double total = 0.0;
    for (const auto& [key, c] : cooc) {
        row_sum[static_cast<std::size_t>(key.first)] += c;
        total += c;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& [key, c] : cooc) {
        const double pmi = std::log(c * total / (row_sum[static_cast<std::size_t>(key.first)] *
                                                 row_sum[static_cast<std::size_t>(key.second)]));
        if (pmi > 0.0) triplets.emplace_back(key.first, key.second, pmi);
    }
    Eigen::SparseMatrix<double> ppmi(v, v);
    ppmi.setFromTriplets(triplets.begin(), triplets.end());

    const auto d = static_cast<Eigen::Index>(config.dimensions);
    Eigen::MatrixXd vectors;
    if (d == 0 || v <= d) {
        vectors = Eigen::MatrixXd(ppmi);
    } else {
        const Eigen::Index block = std::min<Eigen::Index>(v, d + 10);
        std::mt19937 rng(config.seed);
        Eigen::MatrixXd q(v, block);
        for (Eigen::Index c = 0; c < block; ++c) {
            for (Eigen::Index r = 0; r < v; ++r) q(r, c) = centered_uniform(rng);
        }
        q = orthonormalize(q);
        for (std::size_t it = 0; it < config.power_iterations; ++it) q = orthonormalize(ppmi * q);

        const Eigen::MatrixXd t = q.transpose() * (ppmi * q);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (t + t.transpose()));
        std::vector<Eigen::Index> order(static_cast<std::size_t>(block));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::fabs(eig.eigenvalues()(a)) > std::fabs(eig.eigenvalues()(b));
        });
        vectors.resize(v, d);
        for (Eigen::Index k = 0; k < d; ++k) {
            const auto src = order[static_cast<std::size_t>(k)];
            vectors.col(k) = q * eig.eigenvectors().col(src) * std::sqrt(std::fabs(eig.eigenvalues()(src)));
        }
    }

    model.dimension_ = static_cast<std::size_t>(vectors.cols());
    model.vectors_.assign(static_cast<std::size_t>(v), std::vector<double>(model.dimension_));
    for (Eigen::Index r = 0; r < v; ++r) {
        for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
            model.vectors_[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = vectors(r, c);
        }
    }
    return model;
}

std::vector<double> sentence_vector(const EmbeddingModel& model, std::string_view sentence) {
    std::vector<double> out(model.dimension(), 0.0);
    std::size_t known = 0;
    for (const auto& t : model.config().tokenizer.tokenize(sentence)) {
        const auto* vec = model.vector(t);
        if (!vec) continue;
        ++known;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*vec)[i];
    }
    if (known > 0) {
        for (auto& x : out) x /= static_cast<double>(known);
    }
    return out;
}

std::optional<double> cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "vector dimensions differ: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return std::nullopt;
    if (u == v) return 1.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingModel& model, std::string_view term,
                                                              std::size_t k) {
    std::vector<std::pair<std::string, double>> out;
    const auto* target = model.vector(term);
    if (!target) return out;
    for (const auto& [other, _] : model.vocabulary()) {
        if (other == term) continue;
        if (auto c = cosine_similarity(*target, *model.vector(other))) out.emplace_back(other, *c);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (out.size() > k) out.resize(k);
    return out;
}

// ---------------------------------------------------------------------------

SynonymTable parse_synonyms_csv(std::string_view content) {
    SynonymTable table;
    const auto rows = csv::parse(content);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.empty() || text::trim(row[0]).empty() || text::trim(row[0]).front() == '#') continue;
        const auto term = text::to_lower_ascii(text::trim(row[0]));
        if (r == 0 && term == "term") continue;
        if (text::word_tokens(term).size() != 1) {
            throw PositionedError(ErrorCode::InvalidArgument, r + 1, "synonym term '" + term + "' is not one token");
        }
        auto& syns = table[term];
        if (row.size() < 2) continue;
        for (const auto& raw : text::split(row[1], '|')) {
            const auto syn = text::to_lower_ascii(text::trim(raw));
            if (syn.empty()) continue;
            if (syn == term) throw PositionedError(ErrorCode::InvalidArgument, r + 1, "'" + term + "' lists itself");
            if (text::word_tokens(syn).size() != 1 || text::word_tokens(syn)[0].text != syn) {
                throw PositionedError(ErrorCode::InvalidArgument, r + 1, "synonym '" + syn + "' is not one token");
            }
            if (std::find(syns.begin(), syns.end(), syn) == syns.end()) syns.push_back(syn);
        }
    }
    std::erase_if(table, [](const auto& kv) { return kv.second.empty(); });
    return table;
}

SynonymTable default_synonyms() { return parse_synonyms_csv(text::read_file(data_file("synonyms.csv"))); }

Paraphrase generate_paraphrase(std::string_view sentence, const SynonymTable& table, const ParaphraseConfig& config) {
    Paraphrase out;
    out.text = std::string(sentence);
    const auto tokens = text::word_tokens(sentence);

    std::size_t content = 0;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto lower = text::to_lower_ascii(tokens[i].text);
        if (config.tokenizer.tokenize(lower).empty()) continue;
        ++content;
        if (table.contains(lower)) eligible.push_back(i);
    }
    if (eligible.empty()) return out;

    const auto budget = static_cast<std::size_t>(std::floor(config.max_fraction * static_cast<double>(content) + 1e-9));
    const std::size_t k = std::min(eligible.size(), std::max<std::size_t>(1, budget));

    std::mt19937 rng(config.seed ^ fnv1a(sentence));
    // Fisher-Yates on engine output keeps the order portable.
    for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[rng() % i]);
    eligible.resize(k);
    std::sort(eligible.begin(), eligible.end(), std::greater<>());

    for (auto i : eligible) {
        const auto& tok = tokens[i];
        const auto& syns = table.find(text::to_lower_ascii(tok.text))->second;
        std::string repl = syns[rng() % syns.size()];
        if (!tok.text.empty() && std::isupper(static_cast<unsigned char>(tok.text[0]))) {
            repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
        }
        out.text.replace(tok.begin, tok.end - tok.begin, repl);
        ++out.substitutions;
    }
    out.unchanged = out.text == sentence;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<PairSimilarity> score_pairs(const EmbeddingModel& model, const std::vector<SentencePair>& pairs) {
    std::vector<PairSimilarity> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.push_back({p.original, p.synthetic,
                       cosine_similarity(sentence_vector(model, p.original), sentence_vector(model, p.synthetic))});
    }
    return out;
}

GateReport gate_report(const std::vector<PairSimilarity>& pairs, double threshold) {
    constexpr std::size_t kBins = 40;
    GateReport r;
    r.pair_count = pairs.size();
    r.threshold = threshold;
    r.bins.assign(kBins, 0);
    std::size_t defined = 0;
    for (const auto& p : pairs) {
        if (!p.cosine) {
            ++r.undefined;
            continue;
        }
        ++defined;
        const double c = std::clamp(*p.cosine, -1.0, 1.0);
        auto bin = static_cast<std::size_t>(std::floor((c + 1.0) / kGateBinWidth + 1e-9));
        ++r.bins[std::min(bin, kBins - 1)];
        if (c + 1e-12 >= threshold) ++r.passed;
    }
    if (defined > 0) r.pass_fraction = static_cast<double>(r.passed) / static_cast<double>(defined);
    return r;
}

std::vector<SentencePair> read_pairs_csv(std::string_view content) {
    const auto table = csv::Table::parse(content);
    if (!table.has_columns({"original", "synthetic"})) {
        throw PositionedError(ErrorCode::InvalidArgument, 0, "pair file needs original,synthetic columns");
    }
    std::vector<SentencePair> out;
    for (std::size_t r = 0; r < table.size(); ++r) out.push_back({table.get(r, "original"), table.get(r, "synthetic")});
    return out;
}

std::string write_pairs_csv(const std::vector<SentencePair>& pairs) {
    std::string out = csv::format_row({"original", "synthetic"});
    for (const auto& p : pairs) out += csv::format_row({p.original, p.synthetic});
    return out;
}

std::string gate_report_csv(const GateReport& r) {
    std::string out = csv::format_row({"bin_low", "bin_high", "count"});
    for (std::size_t i = 0; i < r.bins.size(); ++i) {
        const double lo = -1.0 + static_cast<double>(i) * kGateBinWidth;
        out += csv::format_row({text::fixed(lo, 2), text::fixed(lo + kGateBinWidth, 2), std::to_string(r.bins[i])});
    }
    out += csv::format_row({"undefined", "", std::to_string(r.undefined)});
    out += "# pairs=" + std::to_string(r.pair_count) + " threshold=" + text::fixed(r.threshold, 2) +
           " passed=" + std::to_string(r.passed) +
           " pass_fraction=" + (r.pass_fraction ? text::fixed(*r.pass_fraction, 4) : std::string("-")) + "\n";
    return out;
}

}  // namespace hfa::synthtest
