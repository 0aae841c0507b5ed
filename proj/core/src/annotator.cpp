#include "hfa/annotator.hpp"

#include "hfa/data_paths.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace hfa::annotator {

using nlohmann::json;

namespace {

constexpr std::string_view kModelFormat = "hfa-annotation-model";
constexpr int kModelFormatVersion = 1;

SentenceVector make_vector(std::map<std::string, double, std::less<>> weights) {
    SentenceVector v;
    double sq = 0.0;
    v.weights.reserve(weights.size());
    for (auto& [term, w] : weights) {
        if (w == 0.0) continue;
        sq += w * w;
        v.weights.emplace_back(term, w);
    }
    v.norm = std::sqrt(sq);
    return v;
}

SentenceVector unit(const SentenceVector& v) {
    if (v.is_zero()) return v;
    SentenceVector u = v;
    for (auto& [_, w] : u.weights) w /= v.norm;
    double sq = 0.0;
    for (const auto& [_, w] : u.weights) sq += w * w;
    u.norm = std::sqrt(sq);
    return u;
}

bool assigns(double score, double threshold) { return score + kThresholdTolerance >= threshold; }

std::vector<double> threshold_grid(double step) {
    if (!(step > 0.0) || step > 1.0) throw Error(ErrorCode::InvalidArgument, "threshold_step must be in (0,1]");
    const auto n = static_cast<int>(std::llround(1.0 / step));
    std::vector<double> grid;
    for (int k = 1; k <= n; ++k) grid.push_back(static_cast<double>(k) / n);
    return grid;
}

void validate_examples(const std::vector<TrainingExample>& examples, const taxonomy::Taxonomy& taxonomy) {
    for (const auto& ex : examples) {
        for (const auto& c : ex.concepts) {
            const auto* node = taxonomy.find(c);
            if (!node || !node->annotatable) {
                throw Error(ErrorCode::UnresolvableConcept, "concept " + c.str() + " is not an annotatable taxonomy code");
            }
        }
    }
}

// Fits idf, centroids and seed terms; thresholds are left for calibration.
void fit(AnnotationModel& model, std::map<std::string, double, std::less<>>& idf,
         std::map<ConceptCode, ConceptPrototype>& prototypes, const std::vector<TrainingExample>& examples,
         const taxonomy::Taxonomy& taxonomy, const TrainConfig& config) {
    std::map<std::string, std::size_t, std::less<>> df;
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(examples.size());
    for (const auto& ex : examples) {
        auto tokens = config.tokenizer.tokenize(ex.text);
        std::set<std::string> uniq(tokens.begin(), tokens.end());
        for (const auto& t : uniq) ++df[t];
        tokenized.push_back(std::move(tokens));
    }
    const double n = static_cast<double>(examples.size());
    idf.clear();
    for (const auto& [term, count] : df) idf[term] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;

    std::map<ConceptCode, std::map<std::string, double, std::less<>>> sums;
    std::map<ConceptCode, std::size_t> support;
    for (const auto& ex : examples) {
        const auto v = unit(model.featurize(ex.text));
        for (const auto& c : ex.concepts) {
            ++support[c];
            auto& acc = sums[c];
            for (const auto& [term, w] : v.weights) acc[term] += w;
        }
    }

    prototypes.clear();
    for (auto& [code, acc] : sums) {
        ConceptPrototype p;
        p.code = code;
        p.support = support[code];
        double max_w = 0.0;
        for (auto& [_, w] : acc) {
            w /= static_cast<double>(p.support);
            max_w = std::max(max_w, w);
        }
        for (const auto& t : config.tokenizer.tokenize(taxonomy.at(code).name)) {
            if (idf.contains(t)) p.seed_terms.insert(t);
        }
        const double seed_w = config.seed_weight_fraction * max_w;
        for (const auto& t : p.seed_terms) acc[t] += seed_w;
        p.centroid = unit(make_vector(acc));
        prototypes.emplace(code, std::move(p));
    }
}

// ---------------------------------------------------------------------------
// JSON

json vector_to_json(const SentenceVector& v) {
    json arr = json::array();
    for (const auto& [term, w] : v.weights) arr.push_back(json::array({term, w}));
    return arr;
}

SentenceVector vector_from_json(const json& j, double norm) {
    SentenceVector v;
    for (const auto& pair : j) v.weights.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<double>());
    v.norm = norm;
    return v;
}

json example_to_json(const TrainingExample& ex) {
    json codes = json::array();
    for (const auto& c : ex.concepts) codes.push_back(c.str());
    return json{{"doc_id", ex.sentence_id.doc_id}, {"idx", ex.sentence_id.index}, {"text", ex.text},
                {"concepts", codes}, {"source", to_string(ex.source)}, {"batch_id", ex.batch_id}};
}

TrainingExample example_from_json(const json& j) {
    TrainingExample ex;
    ex.sentence_id = {j.at("doc_id").get<std::string>(), j.at("idx").get<std::size_t>()};
    ex.text = j.at("text").get<std::string>();
    for (const auto& c : j.at("concepts")) ex.concepts.insert(ConceptCode(c.get<std::string>()));
    ex.source = parse_example_source(j.at("source").get<std::string>());
    ex.batch_id = j.value("batch_id", std::string{});
    return ex;
}

const TokenizerConfig& cached_default_tokenizer() {
    static const TokenizerConfig config = [] {
        TokenizerConfig c;
        for (const auto& raw : text::split(text::read_file(data_file("stopwords.txt")), '\n')) {
            const auto w = text::trim(raw);
            if (!w.empty() && w.front() != '#') c.stopwords.insert(text::to_lower_ascii(w));
        }
        return c;
    }();
    return config;
}

}  // namespace

// ---------------------------------------------------------------------------

TokenizerConfig TokenizerConfig::defaults() { return cached_default_tokenizer(); }

std::vector<std::string> TokenizerConfig::tokenize(std::string_view input) const {
    std::vector<std::string> out;
    for (auto& tok : text::word_tokens(input)) {
        auto t = lowercase ? text::to_lower_ascii(tok.text) : std::move(tok.text);
        if (t.size() < min_token_length) continue;
        if (stopwords.contains(lowercase ? t : text::to_lower_ascii(t))) continue;
        out.push_back(std::move(t));
    }
    return out;
}

double SentenceVector::dot(const SentenceVector& other) const {
    double sum = 0.0;
    auto a = weights.begin();
    auto b = other.weights.begin();
    while (a != weights.end() && b != other.weights.end()) {
        const int cmp = a->first.compare(b->first);
        if (cmp == 0) {
            sum += a->second * b->second;
            ++a;
            ++b;
        } else if (cmp < 0) {
            ++a;
        } else {
            ++b;
        }
    }
    return sum;
}

double SentenceVector::weight(std::string_view term) const {
    auto it = std::lower_bound(weights.begin(), weights.end(), term,
                               [](const auto& p, std::string_view t) { return p.first < t; });
    return it != weights.end() && it->first == term ? it->second : 0.0;
}

double cosine(const SentenceVector& a, const SentenceVector& b) {
    if (a.is_zero() || b.is_zero()) return 0.0;
    return std::clamp(a.dot(b) / (a.norm * b.norm), -1.0, 1.0);
}

std::string_view to_string(ExampleSource source) { return source == ExampleSource::Expert ? "expert" : "verdict"; }

ExampleSource parse_example_source(std::string_view s) {
    if (s == "expert") return ExampleSource::Expert;
    if (s == "verdict") return ExampleSource::Verdict;
    throw Error(ErrorCode::InvalidArgument, "unknown example source '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

std::vector<ConceptCode> AnnotationModel::concepts() const {
    std::vector<ConceptCode> out;
    for (const auto& [c, _] : prototypes_) out.push_back(c);
    return out;
}

SentenceVector AnnotationModel::featurize(std::string_view input) const {
    std::map<std::string, double, std::less<>> tf;
    for (auto& t : config_.tokenizer.tokenize(input)) {
        if (idf_.contains(t)) tf[std::move(t)] += 1.0;
    }
    for (auto& [term, w] : tf) w *= idf_.find(term)->second;
    return make_vector(std::move(tf));
}

Prediction AnnotationModel::predict(const SentenceId& id, std::string_view input) const {
    if (!trained()) throw Error(ErrorCode::UntrainedModel, "model has not been trained");
    Prediction p;
    p.sentence_id = id;
    p.model_version = version_;
    const auto v = featurize(input);
    if (v.is_zero()) return p;
    for (const auto& [code, proto] : prototypes_) {
        const double score = cosine(v, proto.centroid);
        if (assigns(score, proto.threshold)) p.assigned.push_back({code, score});
    }
    return p;
}

AnnotationModel train(const std::vector<TrainingExample>& examples, const taxonomy::Taxonomy& taxonomy,
                      const TrainConfig& config, const std::string& batch_id) {
    if (std::none_of(examples.begin(), examples.end(), [](const auto& ex) { return !ex.concepts.empty(); })) {
        throw Error(ErrorCode::EmptyTrainingSet, "no labelled training examples");
    }
    validate_examples(examples, taxonomy);
    threshold_grid(config.threshold_step);

    AnnotationModel m;
    m.config_ = config;
    m.examples_ = examples;
    fit(m, m.idf_, m.prototypes_, examples, taxonomy, config);
    m = calibrate_thresholds(std::move(m), examples);
    m.version_ = 1;
    m.training_log_ = {{batch_id, examples.size()}};
    return m;
}

AnnotationModel calibrate_thresholds(AnnotationModel model, const std::vector<TrainingExample>& examples) {
    const auto grid = threshold_grid(model.config_.threshold_step);
    std::vector<SentenceVector> vectors;
    vectors.reserve(examples.size());
    for (const auto& ex : examples) vectors.push_back(model.featurize(ex.text));

    for (auto& [code, proto] : model.prototypes_) {
        std::vector<double> scores;
        std::vector<bool> positive;
        scores.reserve(examples.size());
        for (std::size_t i = 0; i < examples.size(); ++i) {
            scores.push_back(vectors[i].is_zero() ? -2.0 : cosine(vectors[i], proto.centroid));
            positive.push_back(examples[i].concepts.contains(code));
        }
        double best_f = -1.0;
        double best_t = grid.back();
        for (double t : grid) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                const bool hit = assigns(scores[i], t);
                if (hit && positive[i]) ++tp;
                else if (hit) ++fp;
                else if (positive[i]) ++fn;
            }
            const double f = tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
            if (f >= best_f) {  // ascending grid: ">=" prefers the higher threshold on ties
                best_f = f;
                best_t = t;
            }
        }
        proto.threshold = best_t;
    }
    return model;
}

AnnotationModel update_with_verdicts(const AnnotationModel& model, const std::vector<TrainingExample>& verdicts,
                                     const taxonomy::Taxonomy& taxonomy, const std::string& batch_label) {
    if (!model.trained()) throw Error(ErrorCode::UntrainedModel, "cannot retrain an untrained model");
    validate_examples(verdicts, taxonomy);

    // Last verdict per sentence wins, and it replaces any older example.
    std::map<SentenceId, std::size_t> latest;
    for (std::size_t i = 0; i < verdicts.size(); ++i) latest[verdicts[i].sentence_id] = i;

    std::vector<TrainingExample> merged;
    merged.reserve(model.examples_.size() + latest.size());
    for (const auto& ex : model.examples_) {
        if (!latest.contains(ex.sentence_id)) merged.push_back(ex);
    }
    std::vector<TrainingExample> accepted;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (latest[verdicts[i].sentence_id] == i) accepted.push_back(verdicts[i]);
    }
    merged.insert(merged.end(), accepted.begin(), accepted.end());

    AnnotationModel next;
    next.config_ = model.config_;
    next.examples_ = merged;
    fit(next, next.idf_, next.prototypes_, merged, taxonomy, next.config_);
    next = calibrate_thresholds(std::move(next), merged);
    next.version_ = model.version_ + 1;
    next.training_log_ = model.training_log_;
    if (verdicts.empty()) {
        next.training_log_.push_back({batch_label, 0});
    } else {
        std::vector<TrainingLogEntry> entries;
        for (const auto& v : verdicts) {
            auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.batch_id == v.batch_id; });
            if (it == entries.end()) entries.push_back({v.batch_id, 1});
            else ++it->example_count;
        }
        next.training_log_.insert(next.training_log_.end(), entries.begin(), entries.end());
    }

    for (const auto& ex : accepted) {
        const auto p = next.predict(ex.sentence_id, ex.text);
        for (const auto& c : ex.concepts) {
            const bool hit = std::any_of(p.assigned.begin(), p.assigned.end(), [&](const auto& s) { return s.code == c; });
            if (!hit) next.conflicts_.push_back({ex.sentence_id, c});
        }
    }
    return next;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const AnnotationModel& m) {
    json j;
    j["format"] = kModelFormat;
    j["format_version"] = kModelFormatVersion;
    j["version"] = m.version_;
    j["tokenizer"] = {{"lowercase", m.config_.tokenizer.lowercase},
                      {"min_token_length", m.config_.tokenizer.min_token_length},
                      {"stopwords", m.config_.tokenizer.stopwords}};
    j["seed_weight_fraction"] = m.config_.seed_weight_fraction;
    j["threshold_step"] = m.config_.threshold_step;
    json idf = json::array();
    for (const auto& [term, w] : m.idf_) idf.push_back(json::array({term, w}));
    j["idf"] = std::move(idf);
    json protos = json::array();
    for (const auto& [code, p] : m.prototypes_) {
        protos.push_back({{"code", code.str()}, {"threshold", p.threshold}, {"support", p.support},
                          {"seed_terms", p.seed_terms}, {"norm", p.centroid.norm},
                          {"centroid", vector_to_json(p.centroid)}});
    }
    j["prototypes"] = std::move(protos);
    json log = json::array();
    for (const auto& e : m.training_log_) log.push_back({{"batch_id", e.batch_id}, {"examples", e.example_count}});
    j["training_log"] = std::move(log);
    json examples = json::array();
    for (const auto& ex : m.examples_) examples.push_back(example_to_json(ex));
    j["examples"] = std::move(examples);
    json conflicts = json::array();
    for (const auto& c : m.conflicts_) {
        conflicts.push_back({{"doc_id", c.sentence_id.doc_id}, {"idx", c.sentence_id.index}, {"code", c.code.str()}});
    }
    j["calibration_conflicts"] = std::move(conflicts);
    return j.dump() + "\n";
}

AnnotationModel model_from_json(std::string_view content, std::size_t file_size) {
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw PositionedError(ErrorCode::CorruptModelFile, e.byte > 0 ? e.byte - 1 : 0, "model file is not valid JSON");
    }
    try {
        if (j.at("format").get<std::string>() != kModelFormat) {
            throw PositionedError(ErrorCode::CorruptModelFile, 0, "not an annotation model file");
        }
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw PositionedError(ErrorCode::CorruptModelFile, 0, "unsupported model format version");
        }
        AnnotationModel m;
        m.version_ = j.at("version").get<int>();
        const auto& tok = j.at("tokenizer");
        m.config_.tokenizer.lowercase = tok.at("lowercase").get<bool>();
        m.config_.tokenizer.min_token_length = tok.at("min_token_length").get<std::size_t>();
        m.config_.tokenizer.stopwords = tok.at("stopwords").get<std::set<std::string>>();
        m.config_.seed_weight_fraction = j.at("seed_weight_fraction").get<double>();
        m.config_.threshold_step = j.at("threshold_step").get<double>();
        for (const auto& pair : j.at("idf")) m.idf_[pair.at(0).get<std::string>()] = pair.at(1).get<double>();
        for (const auto& pj : j.at("prototypes")) {
            ConceptPrototype p;
            p.code = ConceptCode(pj.at("code").get<std::string>());
            p.threshold = pj.at("threshold").get<double>();
            p.support = pj.at("support").get<std::size_t>();
            p.seed_terms = pj.at("seed_terms").get<std::set<std::string>>();
            p.centroid = vector_from_json(pj.at("centroid"), pj.at("norm").get<double>());
            m.prototypes_.emplace(p.code, std::move(p));
        }
        for (const auto& e : j.at("training_log")) {
            m.training_log_.push_back({e.at("batch_id").get<std::string>(), e.at("examples").get<std::size_t>()});
        }
        for (const auto& e : j.at("examples")) m.examples_.push_back(example_from_json(e));
        for (const auto& c : j.at("calibration_conflicts")) {
            m.conflicts_.push_back({{c.at("doc_id").get<std::string>(), c.at("idx").get<std::size_t>()},
                                    ConceptCode(c.at("code").get<std::string>())});
        }
        return m;
    } catch (const json::exception& e) {
        throw PositionedError(ErrorCode::CorruptModelFile, file_size, std::string("model file is incomplete: ") + e.what());
    } catch (const PositionedError&) {
        throw;
    } catch (const Error& e) {
        throw PositionedError(ErrorCode::CorruptModelFile, file_size, e.what());
    }
}

void save_model(const AnnotationModel& model, const std::filesystem::path& path) {
    text::write_file(path, model_to_json(model));
}

AnnotationModel load_model(const std::filesystem::path& path) {
    const auto content = text::read_file(path);
    return model_from_json(content, content.size());
}

// ---------------------------------------------------------------------------

std::vector<TrainingExample> read_training_jsonl(std::string_view content, const taxonomy::Taxonomy& taxonomy,
                                                 const std::string& batch_id) {
    std::vector<TrainingExample> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split(content, '\n')) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            TrainingExample ex;
            ex.sentence_id = {j.at("doc_id").get<std::string>(), j.at("idx").get<std::size_t>()};
            ex.text = j.at("text").get<std::string>();
            for (const auto& label : j.at("concepts")) {
                try {
                    ex.concepts.insert(taxonomy.resolve(label.get<std::string>()).code);
                } catch (const Error& e) {
                    throw Error(ErrorCode::UnresolvableConcept, e.what());
                }
            }
            ex.source = parse_example_source(j.value("source", std::string("expert")));
            ex.batch_id = j.value("batch_id", batch_id);
            out.push_back(std::move(ex));
        } catch (const json::exception& e) {
            throw PositionedError(ErrorCode::InvalidArgument, line_no, std::string("bad training line: ") + e.what());
        }
    }
    return out;
}

std::string write_training_jsonl(const std::vector<TrainingExample>& examples, const taxonomy::Taxonomy& taxonomy) {
    std::string out;
    for (const auto& ex : examples) {
        nlohmann::ordered_json j;
        j["doc_id"] = ex.sentence_id.doc_id;
        j["idx"] = ex.sentence_id.index;
        j["text"] = ex.text;
        auto labels = nlohmann::ordered_json::array();
        for (const auto& c : ex.concepts) labels.push_back(taxonomy.at(c).canonical_label);
        j["concepts"] = std::move(labels);
        j["source"] = to_string(ex.source);
        if (!ex.batch_id.empty()) j["batch_id"] = ex.batch_id;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace hfa::annotator
