#include "ubrl/api.hpp"

#include "ubrl/coverage_store.hpp"
#include "ubrl/decimal.hpp"
#include "ubrl/environments.hpp"
#include "ubrl/simulation.hpp"
#include "ubrl/workbench.hpp"

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace ubrl {

int http_status(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::ParseError: return 400;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::StorageFull: return 507;
    default: return 422;
    }
}

nlohmann::json api_error(std::string_view code, std::string_view message, const nlohmann::json& detail) {
    return {{"code", std::string(code)},
            {"message", std::string(message)},
            {"detail", detail.is_null() ? nlohmann::json::object() : detail}};
}

int resolve_port(std::optional<int> flag) {
    if (flag)
        return *flag;
    if (const char* env = std::getenv("UBRL_PORT"); env && *env) {
        int port = 0;
        const std::string_view text(env);
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), port);
        if (ec != std::errc() || ptr != text.data() + text.size() || port < 0 || port > 65535)
            fail(ErrorKind::ConfigError, "UBRL_PORT is not a port number: '" + std::string(text) + "'");
        return port;
    }
    return 8080;
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                const nlohmann::json& detail = {}) {
    send_json(res, status, api_error(code, message, detail));
}

struct BadRequest {
    std::string message;
};

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body.empty() ? "{}" : req.body);
    } catch (const nlohmann::json::exception&) {
        throw BadRequest{"request body is not valid JSON"};
    }
}

double param_from(const nlohmann::json& value) {
    try {
        return json_decimal(value);
    } catch (const Error&) {
        throw BadRequest{"param must be a decimal number"};
    }
}

template <class Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const BadRequest& e) {
            send_error(res, 400, "BadRequest", e.message);
        } catch (const Error& e) {
            send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
        } catch (const std::exception&) {
            send_error(res, 500, "Internal", "internal error");
        }
    };
}

struct Job {
    std::string status = "pending";
    std::optional<std::string> coverage_id;
    nlohmann::json error;
};

} // namespace

struct ApiServer::Impl {
    ServerOptions options;
    CoverageStore store;
    httplib::Server http;

    std::mutex jobs_mutex;
    std::map<std::string, Job> jobs;
    std::vector<std::jthread> workers;
    std::size_t next_job = 1;

    explicit Impl(ServerOptions opts) : options(std::move(opts)), store(options.store_root) { routes(); }

    ~Impl() {
        http.stop();
        workers.clear();
    }

    std::string checked_id(const httplib::Request& req) {
        const std::string id = req.matches[1];
        if (!is_valid_coverage_id(id))
            throw BadRequest{"malformed coverage set id '" + id + "'"};
        return id;
    }

    void set_job(const std::string& id, Job job) {
        std::lock_guard guard(jobs_mutex);
        jobs[id] = std::move(job);
    }

    void routes();
};

void ApiServer::Impl::routes() {
    http.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, {{"status", "ok"}});
             }));

    http.Get("/api/environments", guarded([](const httplib::Request&, httplib::Response& res) {
                 auto list = nlohmann::json::array();
                 for (const auto& name : environment_names())
                     list.push_back(to_json(make_environment(name)));
                 send_json(res, 200, list);
             }));

    http.Post("/api/solve", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  SolveRequest request = solve_request_from_json(parse_body(req));
                  // Cheap validation up front so bad requests fail synchronously.
                  make_environment(request.env, request.params);
                  check_criterion(make_grid(request.utility, request.grid.lo, request.grid.hi, request.grid.count).base,
                                  request.criterion);

                  std::string job_id;
                  {
                      std::lock_guard guard(jobs_mutex);
                      char buf[32];
                      std::snprintf(buf, sizeof buf, "job-%06zu", next_job++);
                      job_id = buf;
                      jobs[job_id] = Job{};
                      workers.emplace_back([this, job_id, request] {
                          set_job(job_id, Job{"running", std::nullopt, nullptr});
                          try {
                              auto out = run_solve(request);
                              const auto id = store.save(out.set, out.env.mdp);
                              set_job(job_id, Job{"done", id, nullptr});
                          } catch (const Error& e) {
                              set_job(job_id, Job{"failed", std::nullopt, api_error(to_string(e.kind()), e.what())});
                          } catch (const std::exception&) {
                              set_job(job_id, Job{"failed", std::nullopt, api_error("Internal", "internal error")});
                          }
                      });
                  }
                  send_json(res, 202, {{"job_id", job_id}});
              }));

    http.Get(R"(/api/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::lock_guard guard(jobs_mutex);
                 auto it = jobs.find(req.matches[1]);
                 if (it == jobs.end())
                     fail(ErrorKind::NotFound, "no job '" + std::string(req.matches[1]) + "'");
                 nlohmann::json body = {{"job_id", it->first}, {"status", it->second.status}};
                 if (it->second.coverage_id)
                     body["coverage_id"] = *it->second.coverage_id;
                 if (!it->second.error.is_null())
                     body["error"] = it->second.error;
                 send_json(res, 200, body);
             }));

    http.Get(R"(/api/coverage/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, store.load_json(checked_id(req)));
             }));

    http.Get(R"(/api/coverage/([^/]+)/what-if)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto id = checked_id(req);
                 if (!req.has_param("param"))
                     throw BadRequest{"missing query parameter 'param'"};
                 const double param = param_from(req.get_param_value("param"));
                 const CoverageSet set = store.load(id);
                 const auto mdp = store.load_mdp(id);
                 if (!mdp)
                     fail(ErrorKind::NotFound, "coverage set " + id + " has no stored MDP");
                 const auto spec = with_parameter(set.grid.base, param);
                 validate_spec(spec);
                 const auto q = CoverageStore::query_policy(set, param);
                 const auto record = evaluate(*mdp, q.entry->policy, spec, set.criterion);
                 nlohmann::json body = {{"coverage_set", id},
                                        {"param", format_decimal(param)},
                                        {"grid_index", q.grid_index},
                                        {"grid_param", format_decimal(q.param)},
                                        {"nearest", !q.exact},
                                        {"policy", to_json(q.entry->policy)},
                                        {"value", format_decimal(record.value)},
                                        {"expected_return", format_decimal(record.expected_return)}};
                 if (record.distribution)
                     body["distribution"] = to_json(*record.distribution);
                 send_json(res, 200, body);
             }));

    http.Post(R"(/api/coverage/([^/]+)/rollout)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto id = checked_id(req);
                  const auto body = parse_body(req);
                  if (!body.contains("param"))
                      throw BadRequest{"missing 'param'"};
                  if (!body.contains("seed") || !body["seed"].is_number_unsigned())
                      throw BadRequest{"'seed' must be a non-negative integer"};
                  const double param = param_from(body["param"]);
                  const auto seed = body["seed"].get<std::uint64_t>();
                  const CoverageSet set = store.load(id);
                  const auto mdp = store.load_mdp(id);
                  if (!mdp)
                      fail(ErrorKind::NotFound, "coverage set " + id + " has no stored MDP");
                  const auto q = CoverageStore::query_policy(set, param);
                  const Trajectory traj = simulate_episode(*mdp, q.entry->policy, seed);
                  const auto ret = discounted_return(traj, mdp->gamma);
                  send_json(res, 200,
                            {{"coverage_set", id},
                             {"grid_index", q.grid_index},
                             {"param", format_decimal(q.param)},
                             {"seed", seed},
                             {"trajectory", to_json(traj)},
                             {"return", format_decimal(ret.empty() ? 0.0 : ret.front())}});
              }));

    http.Get(R"(/api/coverage/([^/]+)/selections)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto list = nlohmann::json::array();
                 for (const auto& rec : store.list_selections(checked_id(req)))
                     list.push_back(to_json(rec));
                 send_json(res, 200, list);
             }));

    http.Post(R"(/api/coverage/([^/]+)/selection)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto id = checked_id(req);
                  const auto body = parse_body(req);
                  if (!body.contains("param"))
                      throw BadRequest{"missing 'param'"};
                  const double param = param_from(body["param"]);
                  std::string note;
                  std::optional<std::string> key;
                  if (body.contains("note")) {
                      if (!body["note"].is_string())
                          throw BadRequest{"'note' must be a string"};
                      note = body["note"].get<std::string>();
                  }
                  if (body.contains("idempotency_key")) {
                      if (!body["idempotency_key"].is_string())
                          throw BadRequest{"'idempotency_key' must be a string"};
                      key = body["idempotency_key"].get<std::string>();
                  }
                  const CoverageSet set = store.load(id);
                  const auto index = grid_index_of(set.grid, param);
                  send_json(res, 201, to_json(store.record_selection(id, index, note, key)));
              }));

    if (options.static_dir)
        http.set_mount_point("/", options.static_dir->string());

    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty())
            send_error(res, res.status, res.status == 404 ? "NotFound" : "BadRequest", "no such route");
    });
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        send_error(res, 500, "Internal", "internal error");
    });
}

ApiServer::ApiServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0)
        return impl_->http.bind_to_any_port(host);
    return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() { return impl_->http.listen_after_bind(); }

void ApiServer::stop() { impl_->http.stop(); }

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

} // namespace ubrl
