#include "cli.hpp"

#include "hfa/annotator.hpp"
#include "hfa/corpus.hpp"
#include "hfa/csv.hpp"
#include "hfa/data_paths.hpp"
#include "hfa/error.hpp"
#include "hfa/evaluation.hpp"
#include "hfa/fairness.hpp"
#include "hfa/json_io.hpp"
#include "hfa/selection.hpp"
#include "hfa/server.hpp"
#include "hfa/synthtest.hpp"
#include "hfa/taxonomy.hpp"
#include "hfa/text.hpp"
#include "hfa/workflow.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>

namespace hfa::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Options {
    // global
    std::string taxonomy;
    std::uint32_t seed = 20230917;
    bool quiet = false;
    std::string manifest;

    std::vector<std::string> reports;
    std::string metadata;
    std::string batches;
    std::string out;
    std::string sentences;
    std::vector<std::string> lexicons;
    std::string training;
    std::string batch_id = "initial";
    std::string store;
    double threshold_step = 0.05;
    double seed_weight_fraction = 0.1;
    std::string model;
    std::string batch;
    int version = 0;
    std::string verdicts;
    std::string pred;
    std::string gold;
    std::string test_name = "Test";
    std::vector<std::string> annotations;
    bool literal = false;
    std::string group_a;
    std::string group_b;
    std::string before;
    std::string after;
    std::string distribution;
    std::size_t exact_cutoff = 12;
    bool no_continuity = false;
    std::string synonyms;
    std::string input;
    std::string pairs;
    double max_fraction = 0.2;
    double gate_threshold = 0.8;
    std::size_t dimensions = 50;
    std::size_t window = 4;
    std::size_t min_count = 1;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
};

/// Inputs and outputs of one invocation, for the manifest.
class Run {
public:
    Run(std::ostream& out, const Options& opts) : out_(out), opts_(opts) {}

    std::string read(const fs::path& path) {
        auto content = text::read_file(path);
        inputs_.push_back(Json{{"path", path.generic_string()}, {"fnv1a64", fnv1a64(content)}});
        return content;
    }

    void write(const fs::path& path, std::string_view content) {
        text::write_file(path, content);
        outputs_.push_back(Json{{"path", path.generic_string()}, {"fnv1a64", fnv1a64(content)}});
    }

    void info(const std::string& line) const {
        if (!opts_.quiet) out_ << line << "\n";
    }

    Json& versions() { return versions_; }
    void set_manifest_default(fs::path p) { manifest_default_ = std::move(p); }

    taxonomy::Taxonomy load_taxonomy() {
        if (!opts_.taxonomy.empty()) {
            auto t = taxonomy::Taxonomy::parse_csv(read(opts_.taxonomy));
            versions_["taxonomy"] = t.version();
            return t;
        }
        const auto content = text::read_file(data_file("sirch_taxonomy.csv"));
        inputs_.push_back(Json{{"path", "<bundled>/sirch_taxonomy.csv"}, {"fnv1a64", fnv1a64(content)}});
        auto t = taxonomy::Taxonomy::parse_csv(content);
        versions_["taxonomy"] = t.version();
        return t;
    }

    void finish(const std::string& command, const std::vector<std::string>& args, const std::string& config) {
        fs::path path = opts_.manifest;
        if (path.empty()) {
            if (!manifest_default_.empty()) path = manifest_default_;
            else if (!outputs_.empty()) path = outputs_.front().at("path").get<std::string>() + ".manifest.json";
            else path = "hfannotate-" + command + ".manifest.json";
        }
        Json m;
        m["tool"] = "hfannotate";
        m["version"] = HFA_VERSION;
        m["command"] = command;
        m["args"] = args;
        m["seed"] = opts_.seed;
        m["config_hash"] = fnv1a64(config);
        m["config"] = config;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        versions_["hfannotate"] = HFA_VERSION;
        m["versions"] = versions_;
        text::write_file(path, m.dump(2) + "\n");
    }

private:
    std::ostream& out_;
    const Options& opts_;
    Json inputs_ = Json::array();
    Json outputs_ = Json::array();
    Json versions_ = Json::object();
    fs::path manifest_default_;
};

using GroupMap = std::map<std::string, std::string>;

GroupMap read_groups(Run& run, const std::string& path) {
    GroupMap groups;
    if (path.empty()) return groups;
    for (const auto& m : corpus::parse_metadata_csv(run.read(path))) {
        groups[m.doc_id] = m.ethnic_group.value_or(std::string(corpus::kDataNotReceived));
    }
    return groups;
}

evaluation::GroupLookup lookup_in(const GroupMap& groups) {
    return [&groups](const corpus::SentenceId& id) {
        auto it = groups.find(id.doc_id);
        return it == groups.end() ? std::string(corpus::kDataNotReceived) : it->second;
    };
}

evaluation::ConceptSet concepts_in(std::initializer_list<const evaluation::Annotations*> sets) {
    evaluation::ConceptSet out;
    for (const auto* s : sets) {
        for (const auto& [_, cs] : *s) out.insert(cs.begin(), cs.end());
    }
    return out;
}

std::vector<taxonomy::ConceptCode> parse_codes(std::string_view field, const taxonomy::Taxonomy& tax) {
    std::vector<taxonomy::ConceptCode> out;
    if (text::trim(field).empty()) return out;
    for (const auto& part : text::split(field, '|')) {
        const auto label = text::trim(part);
        if (label.empty()) continue;
        try {
            out.push_back(tax.resolve(label).code);
        } catch (const Error& e) {
            throw Error(ErrorCode::UnresolvableConcept, e.what());
        }
    }
    return out;
}

fairness::WilcoxonConfig wilcoxon_config(const Options& o) {
    fairness::WilcoxonConfig c;
    c.exact_cutoff = o.exact_cutoff;
    c.continuity_correction = !o.no_continuity;
    return c;
}

/// Global options plus the options of the command that ran; unset paths and
/// the manifest location are left out so the text can be fed back to --config.
std::string effective_config(const std::string& full, const std::string& command) {
    std::string prefix = command;
    std::replace(prefix.begin(), prefix.end(), '-', '.');
    if (command == "verify-import") prefix = command;
    prefix += '.';
    std::string out;
    for (const auto& line : text::split(full, '\n')) {
        const auto key = line.substr(0, line.find('='));
        if (line.empty() || line.ends_with("=\"\"") || key == "manifest") continue;
        if (key.find('.') != std::string::npos && !key.starts_with(prefix)) continue;
        out += line;
        out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------------------

void cmd_ingest(Run& run, const Options& o) {
    std::vector<fs::path> files;
    for (const auto& r : o.reports) {
        run.read(r);
        files.emplace_back(r);
    }
    std::optional<fs::path> metadata, batches;
    if (!o.metadata.empty()) {
        run.read(o.metadata);
        metadata = o.metadata;
    }
    if (!o.batches.empty()) {
        run.read(o.batches);
        batches = o.batches;
    }
    const auto corpus = corpus::load_corpus(files, metadata, batches);
    for (const auto& w : corpus.warnings()) run.info("warning: " + w);
    run.write(o.out, corpus.to_jsonl());
    run.info("ingested " + std::to_string(corpus.documents().size()) + " reports, " +
             std::to_string(corpus.sentences().size()) + " sentences");
}

void cmd_select(Run& run, const Options& o) {
    const auto sentences = corpus::read_sentences_jsonl(run.read(o.sentences));
    std::vector<selection::Lexicon> lexicons;
    if (o.lexicons.empty()) {
        lexicons = selection::default_lexicons();
    } else {
        for (const auto& l : o.lexicons) lexicons.push_back(selection::Lexicon::parse(fs::path(l).stem().string(), run.read(l)));
    }
    const auto flags = selection::select_batch(sentences, lexicons);
    run.write(o.out, selection::flags_to_csv(flags));
    const auto selected = std::count_if(flags.begin(), flags.end(), [](const auto& f) { return f.selected; });
    run.info("selected " + std::to_string(selected) + " of " + std::to_string(flags.size()) + " sentences");
}

void cmd_train(Run& run, const Options& o) {
    const auto tax = run.load_taxonomy();
    const auto examples = annotator::read_training_jsonl(run.read(o.training), tax, o.batch_id);
    annotator::TrainConfig config;
    config.threshold_step = o.threshold_step;
    config.seed_weight_fraction = o.seed_weight_fraction;
    const auto model = annotator::train(examples, tax, config, o.batch_id);
    run.write(o.out, annotator::model_to_json(model));
    if (!o.store.empty()) {
        auto store = workflow::Store::open(o.store, tax);
        store.register_model(model, {o.batch_id});
        run.info("registered model version " + std::to_string(model.version()) + " in " + o.store);
    }
    run.versions()["model"] = model.version();
    run.info("trained " + std::to_string(model.prototypes().size()) + " concepts on " +
             std::to_string(examples.size()) + " examples");
}

void cmd_predict(Run& run, const Options& o) {
    const auto tax = run.load_taxonomy();
    std::optional<workflow::Store> store;
    annotator::AnnotationModel model;
    if (!o.store.empty()) {
        store.emplace(workflow::Store::open(o.store, tax));
        const int version = o.version > 0 ? o.version : store->latest_version().value_or(0);
        model = store->load_model(version);
    } else {
        if (o.model.empty()) throw Error(ErrorCode::InvalidArgument, "predict needs --model or --store");
        const auto content = run.read(o.model);
        model = annotator::model_from_json(content, content.size());
    }
    run.versions()["model"] = model.version();

    auto sentences = corpus::read_sentences_jsonl(run.read(o.sentences));
    if (!o.batches.empty()) {
        if (o.batch.empty()) throw Error(ErrorCode::InvalidArgument, "--batches needs --batch");
        std::set<std::string> docs;
        bool found = false;
        for (const auto& b : corpus::parse_batches_csv(run.read(o.batches))) {
            if (b.batch_id != o.batch) continue;
            found = true;
            docs.insert(b.doc_ids.begin(), b.doc_ids.end());
        }
        if (!found) throw Error(ErrorCode::NotFound, "batch '" + o.batch + "' not in " + o.batches);
        std::erase_if(sentences, [&](const auto& s) { return !docs.contains(s.id.doc_id); });
    }

    const auto groups = read_groups(run, o.metadata);
    const auto group_of = lookup_in(groups);
    std::string out;
    std::vector<workflow::PredictedSentence> queue;
    std::size_t labelled = 0;
    for (const auto& s : sentences) {
        auto p = model.predict(s.id, s.text);
        if (!p.assigned.empty()) ++labelled;
        out += json_io::to_json(p).dump();
        out.push_back('\n');
        queue.push_back({std::move(p), s.text, group_of(s.id)});
    }
    run.write(o.out, out);
    run.info("predicted " + std::to_string(sentences.size()) + " sentences, " + std::to_string(labelled) +
             " with concepts");
    if (store) {
        const auto r = store->enqueue_predictions(queue, o.batch.empty() ? std::string("default") : o.batch);
        run.info("enqueued " + std::to_string(r.created) + " tasks, " + std::to_string(r.skipped) + " skipped, " +
                 std::to_string(r.duplicate) + " already queued");
    }
}

void cmd_verify_import(Run& run, const Options& o) {
    const auto tax = run.load_taxonomy();
    auto store = workflow::Store::open(o.store, tax);
    run.set_manifest_default(fs::path(o.store) / "verify-import.manifest.json");
    const auto table = csv::Table::parse(run.read(o.verdicts));
    const bool explicit_form = table.has_columns({"doc_id", "idx", "annotator_id", "correct", "incorrect"});
    const bool compact_form = table.has_columns({"doc_id", "idx", "annotator_id", "labels"});
    if (!explicit_form && !compact_form) {
        throw PositionedError(ErrorCode::InvalidArgument, 0,
                              "verdict CSV needs doc_id,idx,annotator_id and either correct,incorrect[,added] or labels");
    }

    std::vector<annotator::TrainingExample> derived;
    std::size_t without_task = 0;
    for (std::size_t r = 0; r < table.size(); ++r) {
        corpus::SentenceId id;
        id.doc_id = table.get(r, "doc_id");
        try {
            id.index = std::stoul(table.get(r, "idx"));
        } catch (const std::exception&) {
            throw PositionedError(ErrorCode::InvalidArgument, r + 1, "idx must be an integer");
        }
        const workflow::VerificationTask* task = nullptr;
        if (const auto tid = table.get(r, "task_id"); !tid.empty()) {
            task = store.task(tid);
            if (!task) throw PositionedError(ErrorCode::UnknownTask, r + 1, "no task " + tid);
        } else {
            for (const auto& t : store.tasks()) {
                if (t.sentence_id == id) task = &t;  // latest task for the sentence
            }
        }
        if (!task) {
            ++without_task;
            continue;
        }
        workflow::Verdict v;
        v.task_id = task->task_id;
        v.annotator_id = table.get(r, "annotator_id");
        if (explicit_form) {
            for (const auto& c : parse_codes(table.get(r, "correct"), tax)) v.decisions[c] = workflow::Decision::Correct;
            for (const auto& c : parse_codes(table.get(r, "incorrect"), tax)) v.decisions[c] = workflow::Decision::Incorrect;
            for (const auto& c : parse_codes(table.get(r, "added"), tax)) v.added.insert(c);
        } else {
            const auto labels = parse_codes(table.get(r, "labels"), tax);
            const std::set<taxonomy::ConceptCode> gold(labels.begin(), labels.end());
            std::set<taxonomy::ConceptCode> predicted;
            for (const auto& s : task->predicted) predicted.insert(s.code);
            for (const auto& c : predicted) {
                v.decisions[c] = gold.contains(c) ? workflow::Decision::Correct : workflow::Decision::Incorrect;
            }
            for (const auto& c : gold) {
                if (!predicted.contains(c)) v.added.insert(c);
            }
        }
        try {
            derived.push_back(store.record_verdict(std::move(v)).example);
        } catch (const PositionedError&) {
            throw;
        } catch (const Error& e) {
            throw PositionedError(e.code(), r + 1, e.what());
        }
    }
    if (!o.out.empty()) run.write(o.out, annotator::write_training_jsonl(derived, tax));
    run.info("recorded " + std::to_string(derived.size()) + " verdicts" +
             (without_task ? ", " + std::to_string(without_task) + " rows without a task" : std::string()));
}

void cmd_retrain(Run& run, const Options& o) {
    const auto tax = run.load_taxonomy();
    auto store = workflow::Store::open(o.store, tax);
    run.set_manifest_default(fs::path(o.store) / "retrain.manifest.json");
    const auto v = store.trigger_retrain();
    const auto model = store.load_model(v.version);
    if (!o.out.empty()) run.write(o.out, annotator::model_to_json(model));
    run.versions()["model"] = v.version;
    run.info("model version " + std::to_string(v.version) + " trained on batches " + text::join(v.training_batches, ",") +
             "; " + std::to_string(model.calibration_conflicts().size()) + " calibration conflicts");
}

void write_group_concepts(Run& run, const fs::path& path, const fairness::GroupConceptTable& table,
                          const taxonomy::Taxonomy& tax) {
    std::map<std::string, std::vector<evaluation::ConceptRow>> rows;
    for (const auto& [group, col] : table) {
        for (const auto& [code, pct] : col) rows[group].push_back({code, {}, {}, pct});
    }
    run.write(path, evaluation::group_concept_csv(rows, tax));
}

void cmd_evaluate(Run& run, const Options& o) {
    const auto tax = run.load_taxonomy();
    const fs::path dir = o.out;
    run.set_manifest_default(dir / "manifest.json");
    if (!o.store.empty()) {
        auto store = workflow::Store::open(o.store, tax);
        const auto s = store.snapshot_metrics(o.version, o.batch);
        run.versions()["model"] = o.version;
        run.write(dir / "summary.csv", evaluation::summary_csv(s.per_sentence));
        run.write(dir / "per_concept.csv", evaluation::concept_csv(s.per_concept, tax, o.test_name));
        run.write(dir / "overall.csv", evaluation::overall_csv(s.overall_counts));
        run.write(dir / "per_group.csv", evaluation::group_csv(s.per_group));
        write_group_concepts(run, dir / "per_group_concept.csv", s.per_group_concept, tax);
        run.info("snapshot of version " + std::to_string(o.version) + " on " + o.batch + ": balanced accuracy " +
                 evaluation::render(s.overall.balanced_accuracy));
        return;
    }
    if (o.pred.empty() || o.gold.empty()) throw Error(ErrorCode::InvalidArgument, "evaluate needs --pred and --gold, or --store");
    const auto pred = evaluation::read_annotations_jsonl(run.read(o.pred), tax);
    const auto gold = evaluation::read_annotations_jsonl(run.read(o.gold), tax);
    auto universe = concepts_in({&pred, &gold});
    if (!o.model.empty()) {
        const auto content = run.read(o.model);
        const auto model = annotator::model_from_json(content, content.size());
        for (const auto& c : model.concepts()) universe.insert(c);
        run.versions()["model"] = model.version();
    }
    const auto counts = evaluation::overall_counts(pred, gold, universe);
    run.write(dir / "summary.csv", evaluation::summary_csv(evaluation::per_sentence_summary(pred, gold, universe)));
    run.write(dir / "per_concept.csv",
              evaluation::concept_csv(evaluation::per_concept_table(pred, gold, universe), tax, o.test_name));
    run.write(dir / "overall.csv", evaluation::overall_csv(counts));
    if (!o.metadata.empty()) {
        const auto groups = read_groups(run, o.metadata);
        const auto group_of = lookup_in(groups);
        run.write(dir / "per_group.csv", evaluation::group_csv(evaluation::per_group_table(pred, gold, group_of)));
        run.write(dir / "per_group_concept.csv",
                  evaluation::group_concept_csv(evaluation::per_group_concept_table(pred, gold, universe, group_of), tax));
    }
    run.info("balanced accuracy " + evaluation::render(evaluation::compute_metrics(counts).balanced_accuracy) +
             " over " + std::to_string(universe.size()) + " concepts");
}

void cmd_irr(Run& run, const Options& o, std::ostream& out) {
    const auto tax = run.load_taxonomy();
    evaluation::MultiAnnotatorSet set;
    for (const auto& path : o.annotations) {
        auto name = fs::path(path).stem().string();
        while (set.contains(name)) name += "'";
        set.emplace(name, evaluation::read_annotations_jsonl(run.read(path), tax));
    }
    const auto r = evaluation::inter_rater_reliability(set, o.literal ? evaluation::IrrMode::Literal : evaluation::IrrMode::Union);
    out << "IRR: " << text::fixed(r.irr * 100.0, 2) << "%\n";
    run.info("agreements: " + std::to_string(r.agreements));
    run.info("total concepts: " + std::to_string(r.total_concepts));
    run.info("annotators: " + std::to_string(r.annotators));
    if (!o.out.empty()) run.write(o.out, evaluation::irr_csv(set));
}

void cmd_fairness(Run& run, const Options& o) {
    const auto tax = run.load_taxonomy();
    const auto config = wilcoxon_config(o);
    std::optional<fairness::Comparison> comparison;
    bool did_something = false;

    if (!o.store.empty()) {
        auto store = workflow::Store::open(o.store, tax);
        comparison = store.fairness(o.version, o.batch, o.group_a, o.group_b, config);
        run.versions()["model"] = o.version;
    } else {
        std::optional<evaluation::Annotations> gold;
        if (!o.gold.empty()) gold = evaluation::read_annotations_jsonl(run.read(o.gold), tax);
        const auto groups = read_groups(run, o.metadata);
        const auto group_of = lookup_in(groups);

        if (!o.before.empty() || !o.after.empty()) {
            if (o.before.empty() || o.after.empty() || !gold) {
                throw Error(ErrorCode::InvalidArgument, "version comparison needs --before, --after and --gold");
            }
            const auto before = evaluation::read_annotations_jsonl(run.read(o.before), tax);
            const auto after = evaluation::read_annotations_jsonl(run.read(o.after), tax);
            const auto universe = concepts_in({&before, &after, &*gold});
            const auto tb = fairness::to_group_concept_table(evaluation::per_group_concept_table(before, *gold, universe, group_of));
            const auto ta = fairness::to_group_concept_table(evaluation::per_group_concept_table(after, *gold, universe, group_of));
            const auto rows = fairness::compare_versions(tb, ta, config);
            if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "version comparison needs --out");
            run.write(o.out, fairness::versions_csv(rows));
            for (const auto& [group, c] : rows) {
                run.info(group + ": " + (c ? (c->no_difference ? std::string("no difference") : "W=" + text::fixed(c->test->w, 1)) +
                                                 " p=" + text::fixed(c->p_value, 2)
                                           : std::string("no common concepts")));
            }
            did_something = true;
        } else if (!o.pred.empty()) {
            if (!gold) throw Error(ErrorCode::InvalidArgument, "group comparison needs --gold");
            const auto pred = evaluation::read_annotations_jsonl(run.read(o.pred), tax);
            const auto universe = concepts_in({&pred, &*gold});
            const auto table = fairness::to_group_concept_table(evaluation::per_group_concept_table(pred, *gold, universe, group_of));
            comparison = fairness::compare_groups(table, o.group_a, o.group_b, config);
        }
        if (!o.distribution.empty()) {
            if (!gold || o.metadata.empty()) throw Error(ErrorCode::InvalidArgument, "--distribution needs --gold and --metadata");
            run.write(o.distribution, fairness::distribution_csv(fairness::group_distribution_report(groups, *gold)));
            did_something = true;
        }
    }
    if (comparison) {
        if (o.group_a.empty() || o.group_b.empty()) throw Error(ErrorCode::InvalidArgument, "group comparison needs --a and --b");
        if (!o.out.empty()) run.write(o.out, fairness::comparison_csv(*comparison));
        run.info(comparison->label_a + " vs " + comparison->label_b + ": " +
                 (comparison->no_difference ? std::string("no difference") : "W=" + text::fixed(comparison->test->w, 1)) +
                 " p=" + text::fixed(comparison->p_value, 2));
    } else if (!did_something) {
        throw Error(ErrorCode::InvalidArgument, "fairness needs --store, --pred, --before/--after or --distribution");
    }
}

void cmd_synth_gen(Run& run, const Options& o) {
    std::vector<std::string> sentences;
    if (!o.sentences.empty()) {
        for (auto& s : corpus::read_sentences_jsonl(run.read(o.sentences))) sentences.push_back(std::move(s.text));
    } else if (!o.input.empty()) {
        for (const auto& line : text::split(run.read(o.input), '\n')) {
            if (!text::trim(line).empty()) sentences.emplace_back(text::trim(line));
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "synth gen needs --sentences or --input");
    }
    const auto table = o.synonyms.empty() ? synthtest::default_synonyms() : synthtest::parse_synonyms_csv(run.read(o.synonyms));
    synthtest::ParaphraseConfig config;
    config.max_fraction = o.max_fraction;
    config.seed = o.seed;
    std::vector<synthtest::SentencePair> pairs;
    std::size_t unchanged = 0;
    for (const auto& s : sentences) {
        auto p = synthtest::generate_paraphrase(s, table, config);
        if (p.unchanged) ++unchanged;
        pairs.push_back({s, std::move(p.text)});
    }
    run.write(o.out, synthtest::write_pairs_csv(pairs));
    run.info("generated " + std::to_string(pairs.size()) + " pairs, " + std::to_string(unchanged) + " unchanged");
}

void cmd_synth_gate(Run& run, const Options& o) {
    const auto pairs = synthtest::read_pairs_csv(run.read(o.pairs));
    std::vector<std::string> training;
    for (const auto& p : pairs) {
        training.push_back(p.original);
        training.push_back(p.synthetic);
    }
    if (!o.sentences.empty()) {
        for (auto& s : corpus::read_sentences_jsonl(run.read(o.sentences))) training.push_back(std::move(s.text));
    }
    synthtest::EmbeddingConfig config;
    config.dimensions = o.dimensions;
    config.window = o.window;
    config.min_count = o.min_count;
    config.seed = o.seed;
    const auto model = synthtest::train_embeddings(training, config);
    const auto report = synthtest::gate_report(synthtest::score_pairs(model, pairs), o.gate_threshold);
    run.write(o.out, synthtest::gate_report_csv(report));
    run.info("pass fraction at " + text::fixed(o.gate_threshold, 2) + ": " +
             (report.pass_fraction ? text::fixed(*report.pass_fraction, 4) : std::string("-")) + " (" +
             std::to_string(report.passed) + " of " + std::to_string(report.pair_count - report.undefined) + ")");
}

void cmd_serve(Run& run, const Options& o, std::ostream& out, const std::function<void()>& write_manifest) {
    auto tax = run.load_taxonomy();
    auto store = workflow::Store::open(o.store, std::move(tax));
    run.set_manifest_default(fs::path(o.store) / "serve.manifest.json");
    server::ServerOptions opts;
    opts.host = o.host;
    opts.port = o.port;
    if (!o.static_dir.empty()) opts.static_dir = o.static_dir;
    server::Server srv(store, opts);
    const int port = srv.bind();
    write_manifest();
    out << "listening on http://" << o.host << ":" << port << std::endl;
    srv.listen();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Human-factors concept annotation toolkit", "hfannotate"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "TOML file supplying option values");
    app.add_option("--taxonomy", o.taxonomy, "Taxonomy CSV (default: bundled)")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Seed for every randomized step");
    app.add_flag("--quiet", o.quiet, "Suppress progress output");
    app.add_option("--manifest", o.manifest, "Manifest path (default derived from outputs)");
    app.require_subcommand(1);

    std::function<void(Run&)> action;
    std::string command;
    auto sub = [&](const std::string& name, const std::string& help) {
        auto* s = app.add_subcommand(name, help);
        s->callback([&command, name] { command = name; });
        return s;
    };

    auto* ingest = sub("ingest", "Normalize and segment reports into a sentence file");
    ingest->add_option("--reports", o.reports, "Report text files")->required()->check(CLI::ExistingFile);
    ingest->add_option("--metadata", o.metadata, "Case metadata CSV")->check(CLI::ExistingFile);
    ingest->add_option("--batches", o.batches, "Batch assignment CSV")->check(CLI::ExistingFile);
    ingest->add_option("--out", o.out, "Sentence JSONL output")->required();

    auto* select = sub("select", "Flag sentences by negation and lexicon rules");
    select->add_option("--sentences", o.sentences, "Sentence JSONL")->required()->check(CLI::ExistingFile);
    select->add_option("--lexicon", o.lexicons, "Lexicon files (default: bundled)")->check(CLI::ExistingFile);
    select->add_option("--out", o.out, "Flags CSV output")->required();

    auto* train = sub("train", "Train model version 1 from expert annotations");
    train->add_option("--training", o.training, "Training JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--batch-id", o.batch_id, "Batch label for the training log");
    train->add_option("--threshold-step", o.threshold_step, "Calibration grid step")->check(CLI::Range(0.001, 1.0));
    train->add_option("--seed-weight", o.seed_weight_fraction, "Seed-term weight fraction")->check(CLI::Range(0.0, 10.0));
    train->add_option("--store", o.store, "Register the model in this store");
    train->add_option("--out", o.out, "Model JSON output")->required();

    auto* predict = sub("predict", "Annotate sentences; optionally enqueue verification tasks");
    predict->add_option("--model", o.model, "Model JSON")->check(CLI::ExistingFile);
    predict->add_option("--store", o.store, "Store to read the model from and enqueue into");
    predict->add_option("--model-version", o.version, "Store model version (default: latest)");
    predict->add_option("--sentences", o.sentences, "Sentence JSONL")->required()->check(CLI::ExistingFile);
    predict->add_option("--batches", o.batches, "Batch CSV used to restrict to --batch")->check(CLI::ExistingFile);
    predict->add_option("--batch", o.batch, "Batch id");
    predict->add_option("--metadata", o.metadata, "Case metadata CSV (task groups)")->check(CLI::ExistingFile);
    predict->add_option("--out", o.out, "Prediction JSONL output")->required();

    auto* verify = sub("verify-import", "Record verification verdicts from CSV");
    verify->add_option("--store", o.store, "Store directory")->required();
    verify->add_option("--verdicts", o.verdicts, "Verdict CSV")->required()->check(CLI::ExistingFile);
    verify->add_option("--out", o.out, "Derived training examples JSONL");

    auto* retrain = sub("retrain", "Retrain on verdicts recorded since the latest model");
    retrain->add_option("--store", o.store, "Store directory")->required();
    retrain->add_option("--out", o.out, "Copy of the new model JSON");

    auto* evaluate = sub("evaluate", "Write evaluation tables");
    evaluate->add_option("--pred", o.pred, "Predicted annotations JSONL")->check(CLI::ExistingFile);
    evaluate->add_option("--gold", o.gold, "Gold annotations JSONL")->check(CLI::ExistingFile);
    evaluate->add_option("--model", o.model, "Model whose concepts join the negative universe")->check(CLI::ExistingFile);
    evaluate->add_option("--metadata", o.metadata, "Case metadata CSV (group tables)")->check(CLI::ExistingFile);
    evaluate->add_option("--store", o.store, "Snapshot a store batch instead");
    evaluate->add_option("--version", o.version, "Store model version");
    evaluate->add_option("--batch", o.batch, "Store batch id");
    evaluate->add_option("--test-name", o.test_name, "Column name for the per-concept table");
    evaluate->add_option("--out", o.out, "Output directory")->required();

    auto* irr = sub("irr", "Inter-rater reliability over annotator files");
    irr->add_option("--annotations", o.annotations, "One JSONL per annotator")->required()->expected(2, -1)->check(CLI::ExistingFile);
    irr->add_flag("--literal", o.literal, "Divide by total concepts times annotators");
    irr->add_option("--out", o.out, "Per-report agreement CSV");

    auto* fair = sub("fairness", "Wilcoxon comparisons between groups or model versions");
    fair->add_option("--pred", o.pred, "Predicted annotations JSONL")->check(CLI::ExistingFile);
    fair->add_option("--gold", o.gold, "Gold annotations JSONL")->check(CLI::ExistingFile);
    fair->add_option("--metadata", o.metadata, "Case metadata CSV")->check(CLI::ExistingFile);
    fair->add_option("--a", o.group_a, "First group");
    fair->add_option("--b", o.group_b, "Second group");
    fair->add_option("--before", o.before, "Predictions of the earlier model")->check(CLI::ExistingFile);
    fair->add_option("--after", o.after, "Predictions of the later model")->check(CLI::ExistingFile);
    fair->add_option("--distribution", o.distribution, "Also write the per-group report/concept counts CSV");
    fair->add_option("--store", o.store, "Compare groups from a store snapshot");
    fair->add_option("--version", o.version, "Store model version");
    fair->add_option("--batch", o.batch, "Store batch id");
    fair->add_option("--exact-cutoff", o.exact_cutoff, "Largest n for exact p-values");
    fair->add_flag("--no-continuity", o.no_continuity, "Disable the continuity correction");
    fair->add_option("--out", o.out, "Output CSV");

    auto* synth = app.add_subcommand("synth", "Synthetic test sentences");
    synth->require_subcommand(1);
    auto* gen = synth->add_subcommand("gen", "Generate paraphrase pairs");
    gen->callback([&] { command = "synth-gen"; });
    gen->add_option("--sentences", o.sentences, "Sentence JSONL")->check(CLI::ExistingFile);
    gen->add_option("--input", o.input, "Plain text, one sentence per line")->check(CLI::ExistingFile);
    gen->add_option("--synonyms", o.synonyms, "Synonym CSV (default: bundled)")->check(CLI::ExistingFile);
    gen->add_option("--max-fraction", o.max_fraction, "Largest substituted fraction")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--out", o.out, "Pair CSV output")->required();
    auto* gate = synth->add_subcommand("gate", "Cosine-similarity gate over pairs");
    gate->callback([&] { command = "synth-gate"; });
    gate->add_option("--pairs", o.pairs, "Pair CSV")->required()->check(CLI::ExistingFile);
    gate->add_option("--sentences", o.sentences, "Extra embedding training sentences (JSONL)")->check(CLI::ExistingFile);
    gate->add_option("--threshold", o.gate_threshold, "Admission threshold")->check(CLI::Range(-1.0, 1.0));
    gate->add_option("--dimensions", o.dimensions, "Embedding dimensions (0 = no reduction)");
    gate->add_option("--window", o.window, "Co-occurrence window");
    gate->add_option("--min-count", o.min_count, "Minimum term count");
    gate->add_option("--out", o.out, "Gate report CSV")->required();

    auto* serve = sub("serve", "Serve the verification HTTP API");
    serve->add_option("--store", o.store, "Store directory")->required();
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("--port", o.port, "Port (0 picks a free one)");
    serve->add_option("--static", o.static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const auto config = effective_config(app.config_to_str(true, false), command);
    Run run(out, o);
    auto write_manifest = [&] { run.finish(command, args, config); };
    try {
        if (command == "ingest") cmd_ingest(run, o);
        else if (command == "select") cmd_select(run, o);
        else if (command == "train") cmd_train(run, o);
        else if (command == "predict") cmd_predict(run, o);
        else if (command == "verify-import") cmd_verify_import(run, o);
        else if (command == "retrain") cmd_retrain(run, o);
        else if (command == "evaluate") cmd_evaluate(run, o);
        else if (command == "irr") cmd_irr(run, o, out);
        else if (command == "fairness") cmd_fairness(run, o);
        else if (command == "synth-gen") cmd_synth_gen(run, o);
        else if (command == "synth-gate") cmd_synth_gate(run, o);
        else if (command == "serve") {
            cmd_serve(run, o, out, write_manifest);
            return kExitOk;
        }
        write_manifest();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace hfa::cli
