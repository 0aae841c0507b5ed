#include "fixtures.hpp"

#include "hfa/server.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <thread>

using namespace hfa;
using namespace hfa::server;
using nlohmann::json;

namespace {

struct ApiFixture : ::testing::Test {
    ApiFixture()
        : store(workflow::Store::open(hfa::fixtures::scratch_dir("api"), hfa::fixtures::bundled_taxonomy())), api(store) {
        hfa::fixtures::populate_group_store(store, {{"Asian", 2, 1}, {"Black", 1, 2}}, "b2");
        workflow::PredictedSentence p;
        p.prediction.sentence_id = {"open", 0};
        p.prediction.model_version = 1;
        p.prediction.assigned = {{taxonomy::ConceptCode("3.6"), 0.7}, {taxonomy::ConceptCode("5.2"), 0.6}};
        p.text = "open task";
        p.group = "Asian";
        store.enqueue_predictions({p}, "b3");
        open_task = store.tasks().back().task_id;
    }

    ApiResponse get(const std::string& path, std::map<std::string, std::string> query = {}) {
        return api.handle({"GET", path, std::move(query), {}, ""});
    }
    ApiResponse post(const std::string& path, const std::string& body = "") {
        return api.handle({"POST", path, {}, {}, body});
    }

    workflow::Store store;
    Api api;
    std::string open_task;
};

std::string code_of(const ApiResponse& r) { return json::parse(r.body).at("code").get<std::string>(); }

}  // namespace

TEST_F(ApiFixture, Taxonomy) {
    const auto r = get("/api/taxonomy");
    EXPECT_EQ(r.status, 200);
    EXPECT_FALSE(json::parse(r.body).empty());
}

TEST_F(ApiFixture, NextTask) {
    auto r = get("/api/tasks/next", {{"annotator", "reviewer"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(json::parse(r.body).at("task_id"), open_task);
    r = api.handle({"GET", "/api/tasks/next", {}, {{"x-annotator-id", "reviewer"}}, ""});
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(get("/api/tasks/next").status, 400);
}

TEST_F(ApiFixture, VerdictLifecycle) {
    const auto path = "/api/tasks/" + open_task + "/verdict";
    auto r = post(path, R"({"annotator_id":"r","decisions":{"3.6":"correct"}})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(code_of(r), "IncompleteDecisions");
    EXPECT_EQ(post(path, "{oops").status, 400);
    EXPECT_EQ(post("/api/tasks/t999999/verdict", R"({"annotator_id":"r","decisions":{}})").status, 404);
    r = post(path, R"({"annotator_id":"r","decisions":{"3.6":"correct","5.2":"incorrect"},"added":["4.3"]})");
    ASSERT_EQ(r.status, 201);
    const auto body = json::parse(r.body);
    EXPECT_EQ(body.at("labels"), json::parse(R"(["3.6","4.3"])"));
    EXPECT_EQ(body.at("task").at("status"), "done");
    EXPECT_EQ(get("/api/tasks/next", {{"annotator", "r"}}).status, 204);
}

TEST_F(ApiFixture, RetrainConflictsWithoutNewVerdicts) {
    auto r = post("/api/retrain");
    ASSERT_EQ(r.status, 201);
    EXPECT_EQ(json::parse(r.body).at("version"), 2);
    r = post("/api/retrain");
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(code_of(r), "NoNewVerdicts");
}

TEST_F(ApiFixture, Metrics) {
    auto r = get("/api/metrics/1/b2");
    ASSERT_EQ(r.status, 200);
    const auto body = json::parse(r.body);
    EXPECT_EQ(body.at("model_version"), 1);
    EXPECT_EQ(body.at("coverage"), 1.0);
    EXPECT_EQ(get("/api/metrics/1/none").status, 404);
    EXPECT_EQ(get("/api/metrics/9/b2").status, 404);
    EXPECT_EQ(get("/api/metrics/x/b2").status, 400);
}

TEST_F(ApiFixture, Fairness) {
    EXPECT_EQ(get("/api/fairness/1/b2", {{"a", "Asian"}, {"b", "Black"}, {"continuity", "false"}}).status, 200);
    EXPECT_EQ(get("/api/fairness/1/b2", {{"a", "Asian"}}).status, 400);
    EXPECT_EQ(get("/api/fairness/1/b2", {{"a", "Asian"}, {"b", "Nobody"}}).status, 404);
}

TEST_F(ApiFixture, UnknownRoute) {
    EXPECT_EQ(get("/api/nothing").status, 404);
    EXPECT_EQ(post("/api/taxonomy").status, 404);
}

TEST(ApiStatus, ErrorMapping) {
    EXPECT_EQ(Api::status_for(ErrorCode::UnknownTask), 404);
    EXPECT_EQ(Api::status_for(ErrorCode::NoNewVerdicts), 409);
    EXPECT_EQ(Api::status_for(ErrorCode::InvalidVerdict), 400);
    EXPECT_EQ(Api::status_for(ErrorCode::NoCommonConcepts), 422);
    EXPECT_EQ(Api::status_for(ErrorCode::Io), 500);
}

TEST(Server, SocketRoundTrip) {
    auto store = workflow::Store::open(hfa::fixtures::scratch_dir("socket"), hfa::fixtures::bundled_taxonomy());
    hfa::fixtures::populate_group_store(store, {{"Asian", 1, 1}}, "b2");
    Server server(store, {"127.0.0.1", 0, std::nullopt});
    const int port = server.bind();
    std::thread t([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    httplib::Result r;
    for (int attempt = 0; attempt < 50 && !r; ++attempt) {
        r = client.Get("/api/metrics/1/b2");
        if (!r) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(json::parse(r->body).at("batch_id"), "b2");
    auto miss = client.Post("/api/retrain", "", "application/json");
    ASSERT_TRUE(miss);
    EXPECT_EQ(miss->status, 201);
    server.stop();
    t.join();
}
