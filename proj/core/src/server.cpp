#include "hfa/server.hpp"

#include "hfa/error.hpp"
#include "hfa/json_io.hpp"
#include "hfa/text.hpp"

#include <httplib.h>

#include <mutex>
#include <regex>

namespace hfa::server {

using Json = nlohmann::ordered_json;

namespace {

ApiResponse json_response(int status, const Json& body) { return {status, body.dump()}; }

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
    return json_response(status, Json{{"code", code}, {"message", message}});
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be an integer, got '" + s + "'");
}

std::string header(const ApiRequest& r, const std::string& name) {
    auto it = r.headers.find(name);
    return it == r.headers.end() ? std::string{} : it->second;
}

std::string query(const ApiRequest& r, const std::string& name) {
    auto it = r.query.find(name);
    return it == r.query.end() ? std::string{} : it->second;
}

const std::regex kVerdictPath(R"(^/api/tasks/([^/]+)/verdict$)");
const std::regex kMetricsPath(R"(^/api/metrics/([^/]+)/([^/]+)$)");
const std::regex kFairnessPath(R"(^/api/fairness/([^/]+)/([^/]+)$)");

}  // namespace

int Api::status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownTask:
        case ErrorCode::UnknownModelVersion:
        case ErrorCode::NotFound:
        case ErrorCode::NoVerdictsForBatch:
            return 404;
        case ErrorCode::NoNewVerdicts:
            return 409;
        case ErrorCode::IncompleteDecisions:
        case ErrorCode::InvalidVerdict:
        case ErrorCode::InvalidArgument:
        case ErrorCode::AmbiguousLabel:
            return 400;
        case ErrorCode::NoCommonConcepts:
        case ErrorCode::AllZeroDifferences:
        case ErrorCode::EmptySample:
            return 422;
        default:
            return 500;
    }
}

ApiResponse Api::handle(const ApiRequest& request) {
    try {
        return route(request);
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "Internal", e.what());
    }
}

ApiResponse Api::route(const ApiRequest& r) {
    std::smatch m;
    if (r.method == "GET" && r.path == "/api/taxonomy") {
        std::shared_lock lock(mutex_);
        return json_response(200, json_io::taxonomy_tree(store_.taxonomy()));
    }
    if (r.method == "GET" && r.path == "/api/tasks/next") {
        auto annotator = query(r, "annotator");
        if (annotator.empty()) annotator = header(r, "x-annotator-id");
        if (annotator.empty()) throw Error(ErrorCode::InvalidArgument, "annotator query parameter is required");
        std::shared_lock lock(mutex_);
        const auto task = store_.next_task(annotator);
        if (!task) return {204, ""};
        return json_response(200, workflow::to_json(*task));
    }
    if (r.method == "POST" && std::regex_match(r.path, m, kVerdictPath)) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(r.body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::InvalidVerdict, std::string("body is not JSON: ") + e.what());
        }
        std::unique_lock lock(mutex_);
        auto verdict = workflow::verdict_from_json(body, m[1].str(), store_.taxonomy());
        if (verdict.annotator_id.empty()) verdict.annotator_id = header(r, "x-annotator-id");
        const auto result = store_.record_verdict(std::move(verdict));
        Json out;
        out["task"] = workflow::to_json(result.task);
        out["verdict"] = workflow::to_json(store_.verdicts().back());
        Json labels = Json::array();
        for (const auto& c : result.example.concepts) labels.push_back(c.str());
        out["labels"] = std::move(labels);
        return json_response(201, out);
    }
    if (r.method == "POST" && r.path == "/api/retrain") {
        std::unique_lock lock(mutex_);
        const auto v = store_.trigger_retrain();
        Json out;
        out["version"] = v.version;
        out["model"] = workflow::to_json(v);
        return json_response(201, out);
    }
    if (r.method == "GET" && std::regex_match(r.path, m, kMetricsPath)) {
        const int version = parse_int(m[1].str(), "version");
        std::unique_lock lock(mutex_);  // snapshots are persisted
        const auto s = store_.snapshot_metrics(version, m[2].str());
        return json_response(200, workflow::to_json(s, store_.taxonomy()));
    }
    if (r.method == "GET" && std::regex_match(r.path, m, kFairnessPath)) {
        const int version = parse_int(m[1].str(), "version");
        const auto a = query(r, "a");
        const auto b = query(r, "b");
        if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "query parameters a and b are required");
        fairness::WilcoxonConfig config;
        if (auto c = query(r, "exact_cutoff"); !c.empty()) {
            config.exact_cutoff = static_cast<std::size_t>(parse_int(c, "exact_cutoff"));
        }
        if (auto c = query(r, "continuity"); !c.empty()) config.continuity_correction = c != "0" && c != "false";
        std::unique_lock lock(mutex_);
        return json_response(200, json_io::to_json(store_.fairness(version, m[2].str(), a, b, config)));
    }
    return error_response(404, "NotFound", "no route for " + r.method + " " + r.path);
}

// ---------------------------------------------------------------------------

struct Server::Impl {
    Impl(workflow::Store& store, ServerOptions opts) : api(store), options(std::move(opts)) {}

    Api api;
    ServerOptions options;
    httplib::Server http;
    int port = -1;
};

Server::Server(workflow::Store& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        for (const auto& [k, v] : req.headers) r.headers.emplace(text::to_lower_ascii(k), v);
        r.body = req.body;
        const auto out = impl_->api.handle(r);
        res.status = out.status;
        if (!out.body.empty()) res.set_content(out.body, "application/json");
    };
    auto& http = impl_->http;
    http.Get(R"(/api/.*)", handler);
    http.Post(R"(/api/.*)", handler);
    if (impl_->options.static_dir) http.set_mount_point("/", impl_->options.static_dir->string());
}

Server::~Server() { stop(); }

int Server::bind() {
    auto& o = impl_->options;
    impl_->port = o.port == 0 ? impl_->http.bind_to_any_port(o.host) : (impl_->http.bind_to_port(o.host, o.port) ? o.port : -1);
    if (impl_->port < 0) throw Error(ErrorCode::Io, "cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->port;
}

void Server::listen() {
    if (impl_->port < 0) bind();
    impl_->http.listen_after_bind();
}

void Server::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace hfa::server
