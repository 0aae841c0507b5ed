#include "hfa/workflow.hpp"

#include "hfa/error.hpp"
#include "hfa/json_io.hpp"
#include "hfa/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace hfa::workflow {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kEventsFile = "events.jsonl";

TaskStatus parse_status(std::string_view s) {
    if (s == "pending") return TaskStatus::Pending;
    if (s == "done") return TaskStatus::Done;
    if (s == "stale") return TaskStatus::Stale;
    throw Error(ErrorCode::CorruptStore, "unknown task status '" + std::string(s) + "'");
}

VerificationTask task_from_json(const Json& j) {
    VerificationTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.sentence_id = {j.at("doc_id").get<std::string>(), j.at("idx").get<std::size_t>()};
    t.text = j.at("text").get<std::string>();
    t.batch_id = j.at("batch_id").get<std::string>();
    t.group = j.at("group").get<std::string>();
    t.model_version = j.at("model_version").get<int>();
    for (const auto& p : j.at("predicted")) {
        t.predicted.push_back({ConceptCode(p.at("code").get<std::string>()), p.at("score").get<double>()});
    }
    t.status = parse_status(j.at("status").get<std::string>());
    t.created_at = j.at("created_at").get<std::uint64_t>();
    return t;
}

Verdict verdict_from_event(const Json& j) {
    Verdict v;
    v.task_id = j.at("task_id").get<std::string>();
    v.annotator_id = j.at("annotator_id").get<std::string>();
    for (const auto& [code, d] : j.at("decisions").items()) v.decisions[ConceptCode(code)] = parse_decision(d.get<std::string>());
    for (const auto& a : j.at("added")) v.added.insert(ConceptCode(a.get<std::string>()));
    v.submitted_at = j.at("submitted_at").get<std::uint64_t>();
    return v;
}

std::string task_id_for(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%06llu", static_cast<unsigned long long>(n));
    return buf;
}

Json snapshot_body(const MonitoringSnapshot& s, const taxonomy::Taxonomy& taxonomy) {
    auto j = to_json(s, taxonomy);
    j.erase("created_at");
    return j;
}

}  // namespace

std::string_view to_string(TaskStatus status) {
    switch (status) {
        case TaskStatus::Pending: return "pending";
        case TaskStatus::Done: return "done";
        case TaskStatus::Stale: return "stale";
    }
    return "pending";
}

std::string_view to_string(Decision decision) { return decision == Decision::Correct ? "correct" : "incorrect"; }

Decision parse_decision(std::string_view s) {
    const auto t = text::to_lower_ascii(text::trim(s));
    if (t == "correct") return Decision::Correct;
    if (t == "incorrect") return Decision::Incorrect;
    throw Error(ErrorCode::InvalidVerdict, "decision must be correct or incorrect, got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

Store::Store(std::filesystem::path dir, taxonomy::Taxonomy taxonomy)
    : dir_(std::move(dir)), taxonomy_(std::move(taxonomy)) {}

Store Store::open(const std::filesystem::path& dir, taxonomy::Taxonomy taxonomy) {
    std::filesystem::create_directories(dir / "models");
    Store store(dir, std::move(taxonomy));
    const auto path = dir / kEventsFile;
    if (!std::filesystem::exists(path)) return store;
    std::size_t line_no = 0;
    for (const auto& line : text::split(text::read_file(path), '\n')) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto event = Json::parse(line);
            if (event.at("seq").get<std::uint64_t>() != store.seq_ + 1) {
                throw Error(ErrorCode::CorruptStore, "sequence gap");
            }
            store.apply(event);
        } catch (const Json::exception& e) {
            throw PositionedError(ErrorCode::CorruptStore, line_no, std::string("bad event: ") + e.what());
        } catch (const PositionedError&) {
            throw;
        } catch (const Error& e) {
            throw PositionedError(ErrorCode::CorruptStore, line_no, e.what());
        }
    }
    return store;
}

void Store::apply(const Json& event) {
    seq_ = event.at("seq").get<std::uint64_t>();
    const auto type = event.at("type").get<std::string>();
    if (type == "model_registered") {
        ModelVersion m;
        m.version = event.at("version").get<int>();
        m.model_file = event.at("file").get<std::string>();
        m.training_batches = event.at("training_batches").get<std::vector<std::string>>();
        m.created_at = seq_;
        models_.push_back(std::move(m));
        last_model_seq_ = seq_;
    } else if (type == "task_created") {
        auto t = task_from_json(event.at("task"));
        seen_.emplace(t.sentence_id, t.model_version);
        task_index_[t.task_id] = tasks_.size();
        tasks_.push_back(std::move(t));
        ++task_counter_;
    } else if (type == "task_skipped") {
        SentenceId id{event.at("doc_id").get<std::string>(), event.at("idx").get<std::size_t>()};
        const int version = event.at("model_version").get<int>();
        seen_.emplace(id, version);
        skipped_.emplace_back(id, version);
    } else if (type == "verdict") {
        auto v = verdict_from_event(event.at("verdict"));
        auto it = task_index_.find(v.task_id);
        if (it == task_index_.end()) throw Error(ErrorCode::CorruptStore, "verdict for unknown task " + v.task_id);
        tasks_[it->second].status = TaskStatus::Done;
        verdicts_.push_back(std::move(v));
    } else if (type == "tasks_stale") {
        const int below = event.at("below_version").get<int>();
        for (auto& t : tasks_) {
            if (t.status == TaskStatus::Pending && t.model_version < below) t.status = TaskStatus::Stale;
        }
    } else if (type == "snapshot") {
        Json entry;
        entry["created_at"] = seq_;
        entry["body"] = event.at("body");
        snapshots_[{event.at("version").get<int>(), event.at("batch_id").get<std::string>()}].push_back(std::move(entry));
    } else {
        throw Error(ErrorCode::CorruptStore, "unknown event type '" + type + "'");
    }
}

void Store::append(Json event) {
    Json e;
    e["seq"] = seq_ + 1;
    for (auto& [k, v] : event.items()) e[k] = std::move(v);
    const auto line = e.dump() + "\n";
    {
        std::ofstream out(dir_ / kEventsFile, std::ios::binary | std::ios::app);
        out << line;
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "cannot append to event log in " + dir_.string());
    }
    apply(e);
}

// ---------------------------------------------------------------------------

ModelVersion Store::register_model(const annotator::AnnotationModel& model, std::vector<std::string> training_batches) {
    const int expected = latest_version().value_or(0) + 1;
    if (model.version() != expected) {
        throw Error(ErrorCode::InvalidArgument, "model version " + std::to_string(model.version()) +
                                                    " does not follow registered version " +
                                                    std::to_string(expected - 1));
    }
    const std::string file = "models/model-v" + std::to_string(model.version()) + ".json";
    annotator::save_model(model, dir_ / file);
    Json e;
    e["type"] = "model_registered";
    e["version"] = model.version();
    e["file"] = file;
    e["training_batches"] = training_batches;
    append(std::move(e));
    return models_.back();
}

std::optional<int> Store::latest_version() const {
    if (models_.empty()) return std::nullopt;
    return models_.back().version;
}

annotator::AnnotationModel Store::load_model(int version) const {
    auto it = std::find_if(models_.begin(), models_.end(), [&](const auto& m) { return m.version == version; });
    if (it == models_.end()) throw Error(ErrorCode::UnknownModelVersion, "model version " + std::to_string(version) + " is not registered");
    return annotator::load_model(dir_ / it->model_file);
}

EnqueueResult Store::enqueue_predictions(const std::vector<PredictedSentence>& predictions, const std::string& batch_id) {
    for (const auto& p : predictions) {
        const int v = p.prediction.model_version;
        if (std::none_of(models_.begin(), models_.end(), [&](const auto& m) { return m.version == v; })) {
            throw Error(ErrorCode::UnknownModelVersion, "model version " + std::to_string(v) + " is not registered");
        }
    }
    EnqueueResult result;
    for (const auto& p : predictions) {
        const auto& pred = p.prediction;
        if (seen_.contains({pred.sentence_id, pred.model_version})) {
            ++result.duplicate;
            continue;
        }
        Json e;
        if (pred.assigned.empty()) {
            e["type"] = "task_skipped";
            e["doc_id"] = pred.sentence_id.doc_id;
            e["idx"] = pred.sentence_id.index;
            e["model_version"] = pred.model_version;
            e["batch_id"] = batch_id;
            ++result.skipped;
        } else {
            VerificationTask t;
            t.task_id = task_id_for(task_counter_ + 1);
            t.sentence_id = pred.sentence_id;
            t.text = p.text;
            t.batch_id = batch_id;
            t.group = p.group;
            t.predicted = pred.assigned;
            t.model_version = pred.model_version;
            t.created_at = seq_ + 1;
            e["type"] = "task_created";
            e["task"] = to_json(t);
            ++result.created;
        }
        append(std::move(e));
    }
    return result;
}

std::optional<VerificationTask> Store::next_task(const std::string& annotator_id) const {
    std::set<std::string> judged;
    for (const auto& v : verdicts_) {
        if (v.annotator_id == annotator_id) judged.insert(v.task_id);
    }
    for (const auto& t : tasks_) {
        if (t.status != TaskStatus::Done && !judged.contains(t.task_id)) return t;
    }
    return std::nullopt;
}

const VerificationTask* Store::task(const std::string& task_id) const {
    auto it = task_index_.find(task_id);
    return it == task_index_.end() ? nullptr : &tasks_[it->second];
}

annotator::TrainingExample Store::derive_example(const VerificationTask& task, const Verdict& verdict) const {
    annotator::TrainingExample ex;
    ex.sentence_id = task.sentence_id;
    ex.text = task.text;
    ex.source = annotator::ExampleSource::Verdict;
    ex.batch_id = task.batch_id;
    for (const auto& [code, d] : verdict.decisions) {
        if (d == Decision::Correct) ex.concepts.insert(code);
    }
    ex.concepts.insert(verdict.added.begin(), verdict.added.end());
    return ex;
}

RecordResult Store::record_verdict(Verdict verdict) {
    const auto* t = task(verdict.task_id);
    if (!t) throw Error(ErrorCode::UnknownTask, "no task " + verdict.task_id);
    if (text::trim(verdict.annotator_id).empty()) throw Error(ErrorCode::InvalidVerdict, "annotator id is required");

    std::set<ConceptCode> predicted;
    for (const auto& s : t->predicted) predicted.insert(s.code);
    for (const auto& c : predicted) {
        if (!verdict.decisions.contains(c)) {
            throw Error(ErrorCode::IncompleteDecisions, "no decision for predicted concept " + c.str());
        }
    }
    for (const auto& [c, _] : verdict.decisions) {
        if (!predicted.contains(c)) throw Error(ErrorCode::InvalidVerdict, "decision for unpredicted concept " + c.str());
    }
    for (const auto& c : verdict.added) {
        if (predicted.contains(c)) throw Error(ErrorCode::InvalidVerdict, "added concept " + c.str() + " was already predicted");
        const auto* node = taxonomy_.find(c);
        if (!node || !node->annotatable) {
            throw Error(ErrorCode::InvalidVerdict, "added concept " + c.str() + " is not annotatable");
        }
    }

    verdict.submitted_at = seq_ + 1;
    Json e;
    e["type"] = "verdict";
    e["verdict"] = to_json(verdict);
    append(std::move(e));
    const auto& stored = *task(verdict.task_id);
    return {stored, derive_example(stored, verdicts_.back())};
}

ModelVersion Store::trigger_retrain() {
    const auto latest = latest_version();
    if (!latest) throw Error(ErrorCode::UnknownModelVersion, "no model registered");
    std::vector<annotator::TrainingExample> examples;
    std::vector<std::string> batches;
    for (const auto& v : verdicts_) {
        if (v.submitted_at <= last_model_seq_) continue;
        auto ex = derive_example(*task(v.task_id), v);
        if (std::find(batches.begin(), batches.end(), ex.batch_id) == batches.end()) batches.push_back(ex.batch_id);
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) throw Error(ErrorCode::NoNewVerdicts, "no verdicts since model version " + std::to_string(*latest));

    const auto next = annotator::update_with_verdicts(load_model(*latest), examples, taxonomy_);
    auto registered = register_model(next, batches);
    if (std::any_of(tasks_.begin(), tasks_.end(), [&](const auto& t) {
            return t.status == TaskStatus::Pending && t.model_version < registered.version;
        })) {
        Json e;
        e["type"] = "tasks_stale";
        e["below_version"] = registered.version;
        append(std::move(e));
    }
    return registered;
}

MonitoringSnapshot Store::snapshot_metrics(int version, const std::string& batch_id) {
    const auto model = load_model(version);
    std::map<std::string, const Verdict*> latest;
    for (const auto& v : verdicts_) {
        const auto& t = *task(v.task_id);
        if (t.model_version == version && t.batch_id == batch_id) latest[v.task_id] = &v;
    }
    if (latest.empty()) {
        throw Error(ErrorCode::NoVerdictsForBatch,
                    "no verdicts for batch '" + batch_id + "' under model version " + std::to_string(version));
    }

    evaluation::Annotations predicted, gold;
    std::map<SentenceId, std::string> groups;
    evaluation::ConceptSet universe;
    for (const auto& c : model.concepts()) universe.insert(c);
    for (const auto& [task_id, v] : latest) {
        const auto& t = *task(task_id);
        auto& p = predicted[t.sentence_id];
        for (const auto& s : t.predicted) p.insert(s.code);
        auto ex = derive_example(t, *v);
        gold[t.sentence_id] = ex.concepts;
        universe.insert(p.begin(), p.end());
        universe.insert(ex.concepts.begin(), ex.concepts.end());
        groups[t.sentence_id] = t.group;
    }
    const auto group_of = [&](const SentenceId& id) { return groups.at(id); };

    MonitoringSnapshot s;
    s.model_version = version;
    s.batch_id = batch_id;
    s.overall_counts = evaluation::overall_counts(predicted, gold, universe);
    s.overall = evaluation::compute_metrics(s.overall_counts);
    s.per_sentence = evaluation::per_sentence_summary(predicted, gold, universe);
    s.per_concept = evaluation::per_concept_table(predicted, gold, universe);
    s.per_group = evaluation::per_group_table(predicted, gold, group_of);
    s.per_group_concept =
        fairness::to_group_concept_table(evaluation::per_group_concept_table(predicted, gold, universe, group_of));
    const auto total = std::count_if(tasks_.begin(), tasks_.end(), [&](const auto& t) {
        return t.model_version == version && t.batch_id == batch_id;
    });
    s.coverage = static_cast<double>(latest.size()) / static_cast<double>(total);

    auto body = snapshot_body(s, taxonomy_);
    auto& history = snapshots_[{version, batch_id}];
    if (!history.empty() && history.back().at("body") == body) {
        s.created_at = history.back().at("created_at").get<std::uint64_t>();
        return s;
    }
    s.created_at = seq_ + 1;
    Json e;
    e["type"] = "snapshot";
    e["version"] = version;
    e["batch_id"] = batch_id;
    e["body"] = std::move(body);
    append(std::move(e));
    return s;
}

fairness::Comparison Store::fairness(int version, const std::string& batch_id, const std::string& group_a,
                                     const std::string& group_b, const fairness::WilcoxonConfig& config) {
    const auto s = snapshot_metrics(version, batch_id);
    return fairness::compare_groups(s.per_group_concept, group_a, group_b, config);
}

std::size_t Store::snapshot_count() const {
    std::size_t n = 0;
    for (const auto& [_, history] : snapshots_) n += history.size();
    return n;
}

void Store::compact() {
    const auto path = dir_ / kEventsFile;
    if (!std::filesystem::exists(path)) return;
    std::string out;
    for (const auto& line : text::split(text::read_file(path), '\n')) {
        if (text::trim(line).empty()) continue;
        out += Json::parse(line).dump();
        out.push_back('\n');
    }
    const auto tmp = dir_ / "events.jsonl.tmp";
    text::write_file(tmp, out);
    std::filesystem::rename(tmp, path);
}

std::string Store::state_json() const {
    Json j;
    j["seq"] = seq_;
    Json models = Json::array();
    for (const auto& m : models_) models.push_back(to_json(m));
    j["models"] = std::move(models);
    Json tasks = Json::array();
    for (const auto& t : tasks_) tasks.push_back(to_json(t));
    j["tasks"] = std::move(tasks);
    Json skipped = Json::array();
    for (const auto& [id, v] : skipped_) skipped.push_back(Json{{"doc_id", id.doc_id}, {"idx", id.index}, {"model_version", v}});
    j["skipped"] = std::move(skipped);
    Json verdicts = Json::array();
    for (const auto& v : verdicts_) verdicts.push_back(to_json(v));
    j["verdicts"] = std::move(verdicts);
    Json snaps = Json::array();
    for (const auto& [key, history] : snapshots_) {
        for (const auto& entry : history) {
            snaps.push_back(Json{{"version", key.first}, {"batch_id", key.second}, {"created_at", entry.at("created_at")},
                                 {"body", entry.at("body")}});
        }
    }
    j["snapshots"] = std::move(snaps);
    return j.dump();
}

// ---------------------------------------------------------------------------

Json to_json(const VerificationTask& t) {
    Json j;
    j["task_id"] = t.task_id;
    j["doc_id"] = t.sentence_id.doc_id;
    j["idx"] = t.sentence_id.index;
    j["text"] = t.text;
    j["batch_id"] = t.batch_id;
    j["group"] = t.group;
    j["model_version"] = t.model_version;
    Json predicted = Json::array();
    for (const auto& s : t.predicted) predicted.push_back(Json{{"code", s.code.str()}, {"score", s.score}});
    j["predicted"] = std::move(predicted);
    j["status"] = to_string(t.status);
    j["created_at"] = t.created_at;
    return j;
}

Json to_json(const Verdict& v) {
    Json j;
    j["task_id"] = v.task_id;
    j["annotator_id"] = v.annotator_id;
    Json decisions = Json::object();
    for (const auto& [c, d] : v.decisions) decisions[c.str()] = to_string(d);
    j["decisions"] = std::move(decisions);
    Json added = Json::array();
    for (const auto& c : v.added) added.push_back(c.str());
    j["added"] = std::move(added);
    j["submitted_at"] = v.submitted_at;
    return j;
}

Json to_json(const ModelVersion& m) {
    Json j;
    j["version"] = m.version;
    j["model_file"] = m.model_file;
    j["training_batches"] = m.training_batches;
    j["created_at"] = m.created_at;
    return j;
}

Json to_json(const MonitoringSnapshot& s, const taxonomy::Taxonomy& taxonomy) {
    Json j;
    j["model_version"] = s.model_version;
    j["batch_id"] = s.batch_id;
    j["coverage"] = s.coverage;
    j["overall_counts"] = json_io::to_json(s.overall_counts);
    j["overall"] = json_io::to_json(s.overall);
    j["per_sentence"] = json_io::to_json(s.per_sentence);
    Json concepts = Json::array();
    for (const auto& r : s.per_concept) concepts.push_back(json_io::to_json(r, &taxonomy));
    j["per_concept"] = std::move(concepts);
    j["per_group"] = json_io::to_json(s.per_group);
    Json pgc = Json::object();
    for (const auto& [group, col] : s.per_group_concept) {
        Json g = Json::object();
        for (const auto& [code, pct] : col) g[code.str()] = json_io::to_json(pct);
        pgc[group] = std::move(g);
    }
    j["per_group_concept"] = std::move(pgc);
    j["created_at"] = s.created_at;
    return j;
}

Verdict verdict_from_json(const nlohmann::json& body, const std::string& task_id, const taxonomy::Taxonomy& taxonomy) {
    auto resolve = [&](const std::string& label) {
        try {
            return taxonomy.resolve(label).code;
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidVerdict, e.what());
        }
    };
    try {
        Verdict v;
        v.task_id = task_id;
        v.annotator_id = body.value("annotator_id", std::string{});
        const auto& decisions = body.at("decisions");
        if (decisions.is_object()) {
            for (const auto& [code, d] : decisions.items()) v.decisions[resolve(code)] = parse_decision(d.get<std::string>());
        } else {
            for (const auto& d : decisions) {
                v.decisions[resolve(d.at("code").get<std::string>())] = parse_decision(d.at("decision").get<std::string>());
            }
        }
        if (body.contains("added")) {
            for (const auto& a : body.at("added")) v.added.insert(resolve(a.get<std::string>()));
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidVerdict, std::string("malformed verdict: ") + e.what());
    }
}

}  // namespace hfa::workflow
