#pragma once

#include "hfa/error.hpp"
#include "hfa/workflow.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace hfa::server {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lowercase names
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON, empty for 204
};

/// Routes the workflow HTTP API onto a store. Writers are serialized; the
/// read-only routes share the lock.
class Api {
public:
    explicit Api(workflow::Store& store) : store_(store) {}

    ApiResponse handle(const ApiRequest& request);

    /// HTTP status for an error code.
    static int status_for(ErrorCode code);

private:
    ApiResponse route(const ApiRequest& request);

    workflow::Store& store_;
    std::shared_mutex mutex_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> static_dir;
};

/// cpp-httplib front end over Api.
class Server {
public:
    Server(workflow::Store& store, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Returns the bound port. Throws Io on failure.
    int bind();
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace hfa::server
