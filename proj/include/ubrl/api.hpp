#pragma once

// HTTP API over a coverage store.
//
//   GET  /api/health
//   GET  /api/environments
//   POST /api/solve                       -> 202 {"job_id"}
//   GET  /api/jobs/{job_id}
//   GET  /api/coverage/{id}
//   GET  /api/coverage/{id}/what-if?param=x
//   POST /api/coverage/{id}/rollout       {"param", "seed"}
//   GET  /api/coverage/{id}/selections
//   POST /api/coverage/{id}/selection     {"param", "note", "idempotency_key"?} -> 201
//
// Errors are {"code", "message", "detail"} with 400 / 404 / 409 / 422 / 500 /
// 507 statuses; internal failures never expose exception text.

#include "ubrl/error.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace ubrl {

struct ServerOptions {
    std::filesystem::path store_root = "ubrl-store";
    /// Served under / when set (the explorer's build output).
    std::optional<std::filesystem::path> static_dir;
};

/// HTTP status and ApiError code for a domain error.
int http_status(ErrorKind kind);
nlohmann::json api_error(std::string_view code, std::string_view message, const nlohmann::json& detail = {});

/// Port from the flag, else UBRL_PORT, else 8080. Throws ConfigError for
/// an unparsable UBRL_PORT.
int resolve_port(std::optional<int> flag);

class ApiServer {
public:
    explicit ApiServer(ServerOptions options);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen();
    void stop();
    /// Blocks until the listener accepts connections.
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace ubrl
