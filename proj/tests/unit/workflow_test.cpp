#include "fixtures.hpp"

#include "hfa/error.hpp"
#include "hfa/text.hpp"
#include "hfa/workflow.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hfa;
using namespace hfa::workflow;
using taxonomy::ConceptCode;

namespace {

Store fresh_store(const std::string& name) {
    auto store = Store::open(fixtures::scratch_dir(name), fixtures::bundled_taxonomy());
    store.register_model(fixtures::toy_model(), {"toy"});
    return store;
}

PredictedSentence predicted(const std::string& doc, std::size_t idx, std::vector<const char*> codes, int version = 1,
                            const std::string& group = "Asian") {
    PredictedSentence p;
    p.prediction.sentence_id = {doc, idx};
    p.prediction.model_version = version;
    for (const char* c : codes) p.prediction.assigned.push_back({ConceptCode(c), 0.5});
    p.text = doc + " sentence " + std::to_string(idx);
    p.group = group;
    return p;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

Verdict confirm_all(const VerificationTask& t, const std::string& annotator = "a") {
    Verdict v;
    v.task_id = t.task_id;
    v.annotator_id = annotator;
    for (const auto& s : t.predicted) v.decisions[s.code] = Decision::Correct;
    return v;
}

}  // namespace

TEST(Store, EnqueueSkipsEmptyPredictionsAndIsIdempotent) {
    auto store = fresh_store("wf-enqueue");
    std::vector<PredictedSentence> preds;
    for (std::size_t i = 0; i < 10; ++i) preds.push_back(predicted("d", i, i % 5 == 4 ? std::vector<const char*>{} : std::vector<const char*>{"3.6"}));
    const auto r = store.enqueue_predictions(preds, "b");
    EXPECT_EQ(r.created, 8u);
    EXPECT_EQ(r.skipped, 2u);
    EXPECT_EQ(store.tasks().size(), 8u);
    EXPECT_EQ(store.skipped(), 2u);
    const auto again = store.enqueue_predictions(preds, "b");
    EXPECT_EQ(again.created, 0u);
    EXPECT_EQ(again.duplicate, 10u);
    EXPECT_EQ(store.tasks().size(), 8u);
    EXPECT_EQ(code_of([&] { store.enqueue_predictions({predicted("d", 0, {"3.6"}, 7)}, "b"); }),
              ErrorCode::UnknownModelVersion);
}

TEST(Store, NextTaskIsFifoAndSkipsJudgedTasks) {
    auto store = fresh_store("wf-next");
    store.enqueue_predictions({predicted("d", 0, {"3.6"}), predicted("d", 1, {"5.2"}), predicted("d", 2, {"4.3"})}, "b");
    auto t = store.next_task("a");
    ASSERT_TRUE(t);
    EXPECT_EQ(t->sentence_id.index, 0u);
    store.record_verdict(confirm_all(*t));
    t = store.next_task("a");
    ASSERT_TRUE(t);
    EXPECT_EQ(t->sentence_id.index, 1u);
    EXPECT_EQ(store.task(store.tasks()[0].task_id)->status, TaskStatus::Done);
    store.record_verdict(confirm_all(*t));
    store.record_verdict(confirm_all(*store.next_task("b")));
    EXPECT_FALSE(store.next_task("a"));
}

TEST(Store, StaleTasksStayAvailableToOtherAnnotators) {
    auto store = fresh_store("wf-stale");
    store.enqueue_predictions({predicted("d", 0, {"3.6"}), predicted("d", 1, {"5.2"})}, "b");
    store.record_verdict(confirm_all(store.tasks()[0]));
    store.trigger_retrain();
    EXPECT_EQ(store.tasks()[1].status, TaskStatus::Stale);
    const auto t = store.next_task("a");
    ASSERT_TRUE(t);
    EXPECT_EQ(t->task_id, store.tasks()[1].task_id);
}

TEST(Store, VerdictDerivesCorrectedLabels) {
    auto store = fresh_store("wf-verdict");
    store.enqueue_predictions({predicted("d", 0, {"3.6", "5.2"})}, "b");
    Verdict v;
    v.task_id = store.tasks()[0].task_id;
    v.annotator_id = "expert";
    v.decisions = {{ConceptCode("3.6"), Decision::Correct}, {ConceptCode("5.2"), Decision::Incorrect}};
    v.added = {ConceptCode("4.3")};
    const auto r = store.record_verdict(v);
    EXPECT_EQ(r.example.concepts, (std::set<ConceptCode>{ConceptCode("3.6"), ConceptCode("4.3")}));
    EXPECT_EQ(r.example.source, annotator::ExampleSource::Verdict);
    EXPECT_EQ(r.task.status, TaskStatus::Done);
    EXPECT_GT(store.verdicts().back().submitted_at, r.task.created_at);
}

TEST(Store, VerdictValidation) {
    auto store = fresh_store("wf-invalid");
    store.enqueue_predictions({predicted("d", 0, {"3.6", "5.2"})}, "b");
    const auto id = store.tasks()[0].task_id;
    Verdict v;
    v.task_id = "nope";
    v.annotator_id = "a";
    EXPECT_EQ(code_of([&] { store.record_verdict(v); }), ErrorCode::UnknownTask);
    v.task_id = id;
    v.decisions = {{ConceptCode("3.6"), Decision::Correct}};
    EXPECT_EQ(code_of([&] { store.record_verdict(v); }), ErrorCode::IncompleteDecisions);
    v.decisions[ConceptCode("5.2")] = Decision::Correct;
    v.decisions[ConceptCode("4.3")] = Decision::Correct;
    EXPECT_EQ(code_of([&] { store.record_verdict(v); }), ErrorCode::InvalidVerdict);
    v.decisions.erase(ConceptCode("4.3"));
    v.added = {ConceptCode("3.6")};
    EXPECT_EQ(code_of([&] { store.record_verdict(v); }), ErrorCode::InvalidVerdict);
    v.added = {ConceptCode("3")};
    EXPECT_EQ(code_of([&] { store.record_verdict(v); }), ErrorCode::InvalidVerdict);
    v.added.clear();
    v.annotator_id = " ";
    EXPECT_EQ(code_of([&] { store.record_verdict(v); }), ErrorCode::InvalidVerdict);
    EXPECT_TRUE(store.verdicts().empty());
}

TEST(Store, RetrainAfterFiveVerdicts) {
    auto store = fresh_store("wf-retrain");
    EXPECT_EQ(code_of([&] { store.trigger_retrain(); }), ErrorCode::NoNewVerdicts);
    std::vector<PredictedSentence> preds;
    for (std::size_t i = 0; i < 5; ++i) preds.push_back(predicted("d", i, {"3.6"}));
    store.enqueue_predictions(preds, "b2");
    for (const auto& t : std::vector<VerificationTask>(store.tasks())) store.record_verdict(confirm_all(t));
    const auto v2 = store.trigger_retrain();
    EXPECT_EQ(v2.version, 2);
    EXPECT_EQ(v2.training_batches, std::vector<std::string>{"b2"});
    const auto model = store.load_model(2);
    ASSERT_FALSE(model.training_log().empty());
    EXPECT_EQ(model.training_log().back().batch_id, "b2");
    EXPECT_EQ(model.training_log().back().example_count, 5u);
    EXPECT_EQ(code_of([&] { store.trigger_retrain(); }), ErrorCode::NoNewVerdicts);
    EXPECT_EQ(code_of([&] { store.load_model(9); }), ErrorCode::UnknownModelVersion);
}

TEST(Store, CorrectedSentencesScoreFullyAfterRetrain) {
    auto store = fresh_store("wf-corrected");
    const auto toy = fixtures::toy_corpus();
    std::vector<PredictedSentence> preds;
    // Misattribute CTG sentences to escalation, then correct them.
    for (std::size_t i = 0; i < 3; ++i) {
        auto p = predicted("toy", i, {"3.6"});
        p.text = toy[i].text;
        preds.push_back(p);
    }
    store.enqueue_predictions(preds, "b2");
    for (const auto& t : std::vector<VerificationTask>(store.tasks())) {
        Verdict v;
        v.task_id = t.task_id;
        v.annotator_id = "a";
        v.decisions[ConceptCode("3.6")] = Decision::Incorrect;
        v.added = {ConceptCode("5.2")};
        store.record_verdict(v);
    }
    store.trigger_retrain();
    const auto model = store.load_model(2);
    for (std::size_t i = 0; i < 3; ++i) {
        std::set<ConceptCode> got;
        for (const auto& s : model.predict(toy[i].text).assigned) got.insert(s.code);
        EXPECT_EQ(got, std::set<ConceptCode>{ConceptCode("5.2")}) << toy[i].text;
    }
}

TEST(Store, SnapshotGroupTableAndDeterminism) {
    auto store = Store::open(fixtures::scratch_dir("wf-snapshot"), fixtures::bundled_taxonomy());
    fixtures::populate_group_store(store, fixtures::group_counts_test_a(), "test-a");
    const auto s = store.snapshot_metrics(1, "test-a");
    EXPECT_DOUBLE_EQ(s.coverage, 1.0);
    EXPECT_EQ(s.per_group.sum_correct, 688u);
    EXPECT_EQ(s.per_group.sum_incorrect, 282u);
    EXPECT_EQ(text::fixed(*s.per_group.rows[0].pct_correct, 2), "67.82");
    EXPECT_EQ(evaluation::group_csv(s.per_group).substr(evaluation::group_csv(s.per_group).rfind("Total")),
              "Total,688,282,70.93 ± 4.30\n");
    const auto count = store.snapshot_count();
    const auto again = store.snapshot_metrics(1, "test-a");
    EXPECT_EQ(store.snapshot_count(), count);
    EXPECT_EQ(to_json(s, store.taxonomy()).dump(), to_json(again, store.taxonomy()).dump());
    EXPECT_EQ(code_of([&] { store.snapshot_metrics(1, "none"); }), ErrorCode::NoVerdictsForBatch);
    EXPECT_EQ(code_of([&] { store.snapshot_metrics(4, "test-a"); }), ErrorCode::UnknownModelVersion);
}

TEST(Store, ReplayReproducesStateAndCompactionPreservesIt) {
    const auto dir = fixtures::scratch_dir("wf-replay");
    std::string state;
    {
        auto store = Store::open(dir, fixtures::bundled_taxonomy());
        fixtures::populate_group_store(store, {{"Asian", 3, 2}, {"Black", 2, 2}}, "b2");
        store.enqueue_predictions({predicted("x", 0, {}), predicted("x", 1, {"4.3"})}, "b3");
        store.snapshot_metrics(1, "b2");
        store.trigger_retrain();
        state = store.state_json();
    }
    auto reopened = Store::open(dir, fixtures::bundled_taxonomy());
    EXPECT_EQ(reopened.state_json(), state);
    reopened.compact();
    EXPECT_EQ(Store::open(dir, fixtures::bundled_taxonomy()).state_json(), state);
    // Every created task is in exactly one state.
    std::size_t pending = 0, done = 0, stale = 0;
    for (const auto& t : reopened.tasks()) {
        pending += t.status == TaskStatus::Pending;
        done += t.status == TaskStatus::Done;
        stale += t.status == TaskStatus::Stale;
    }
    EXPECT_EQ(pending + done + stale, reopened.tasks().size());
    EXPECT_EQ(done, 9u);
    EXPECT_EQ(stale, 1u);
}

TEST(Store, CorruptLogReportsLine) {
    const auto dir = fixtures::scratch_dir("wf-corrupt");
    {
        auto store = fresh_store("wf-corrupt");
        store.enqueue_predictions({predicted("d", 0, {"3.6"})}, "b");
    }
    text::write_file(dir / "events.jsonl", text::read_file(dir / "events.jsonl") + "{not json\n");
    try {
        Store::open(dir, fixtures::bundled_taxonomy());
        FAIL();
    } catch (const PositionedError& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptStore);
        EXPECT_EQ(e.position(), 3u);
    }
}

TEST(Store, RandomOperationSequencesReplayIdentically) {
    std::mt19937 rng(11);
    for (int round = 0; round < 5; ++round) {
        const auto dir = fixtures::scratch_dir("wf-random");
        std::string state;
        {
            auto store = Store::open(dir, fixtures::bundled_taxonomy());
            store.register_model(fixtures::toy_model(), {"toy"});
            const char* codes[] = {"3.6", "5.2", "4.3", "6.1.1.1"};
            for (int op = 0; op < 30; ++op) {
                switch (rng() % 3) {
                    case 0:
                        store.enqueue_predictions({predicted("r", rng() % 20, {codes[rng() % 4]}, *store.latest_version())}, "b");
                        break;
                    case 1:
                        if (auto t = store.next_task("a" + std::to_string(rng() % 2))) store.record_verdict(confirm_all(*t));
                        break;
                    default:
                        try {
                            store.trigger_retrain();
                        } catch (const Error& e) {
                            EXPECT_EQ(e.code(), ErrorCode::NoNewVerdicts);
                        }
                }
            }
            state = store.state_json();
        }
        EXPECT_EQ(Store::open(dir, fixtures::bundled_taxonomy()).state_json(), state);
    }
}

TEST(VerdictJson, AcceptsLabelsAndRejectsMalformedBodies) {
    const auto& tax = fixtures::bundled_taxonomy();
    const auto v = verdict_from_json(nlohmann::json::parse(R"({"annotator_id":"a","decisions":{"3.6":"correct"},"added":["5.2"]})"),
                                     "t000001", tax);
    EXPECT_EQ(v.decisions.at(ConceptCode("3.6")), Decision::Correct);
    EXPECT_EQ(v.added, std::set<ConceptCode>{ConceptCode("5.2")});
    EXPECT_EQ(code_of([&] { verdict_from_json(nlohmann::json::parse(R"({"decisions":{"3.6":"maybe"}})"), "t", tax); }),
              ErrorCode::InvalidVerdict);
    EXPECT_EQ(code_of([&] { verdict_from_json(nlohmann::json::parse(R"({"added":[]})"), "t", tax); }),
              ErrorCode::InvalidVerdict);
}
