#include "ubrl/cli.hpp"

#include "ubrl/api.hpp"
#include "ubrl/coverage_store.hpp"
#include "ubrl/decimal.hpp"
#include "ubrl/distributional.hpp"
#include "ubrl/environments.hpp"
#include "ubrl/learners.hpp"
#include "ubrl/workbench.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <sstream>

namespace ubrl::cli {

namespace {

struct Usage {
    std::string message;
};

nlohmann::json key_values(const std::vector<std::string>& pairs) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& kv : pairs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Usage{"expected key=value, got '" + kv + "'"};
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::NotFound, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, path + ": " + e.what());
    }
}

void emit(const nlohmann::json& j, const std::string& out_path, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        out << text;
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file)
        fail(ErrorKind::NotFound, "cannot write " + out_path);
    file << text;
    if (!file)
        fail(ErrorKind::StorageFull, "failed writing " + out_path);
}

/// Where the MDP comes from: a named environment or an MDP JSON file.
struct MdpSource {
    std::string env;
    std::string mdp_file;
    std::vector<std::string> params;

    void add_to(CLI::App* cmd) {
        auto* env_opt = cmd->add_option("--env", env, "Environment name");
        auto* file_opt = cmd->add_option("--mdp", mdp_file, "MDP JSON file");
        env_opt->excludes(file_opt);
        cmd->add_option("--param", params, "Environment parameter key=value (repeatable)");
    }

    struct Loaded {
        Mdp mdp;
        nlohmann::json ref;
    };

    Loaded load() const {
        if (!env.empty()) {
            auto spec = make_environment(env, key_values(params));
            return {spec.mdp, environment_ref(spec)};
        }
        if (mdp_file.empty())
            throw Usage{"one of --env or --mdp is required"};
        if (!params.empty())
            throw Usage{"--param only applies with --env"};
        return {mdp_from_json(read_json(mdp_file)), {{"file", mdp_file}}};
    }
};

struct UtilityChoice {
    std::string family;
    std::vector<std::string> params;
    std::string grid;

    void add_to(CLI::App* cmd, bool family_required = true) {
        auto* opt = cmd->add_option("--utility", family, "Utility family (identity, mining, cvar, discount, satisficing)");
        if (family_required)
            opt->required();
        cmd->add_option("--utility-param", params, "Fixed utility parameter key=value (repeatable)");
        cmd->add_option("--grid", grid, "Parameter grid lo:hi:count");
    }

    ParameterGrid make() const {
        const auto base = utility_from_json({{"family", family}, {"params", key_values(params)}});
        if (grid.empty()) {
            if (family_of(base) != UtilityFamily::Identity)
                throw Usage{"--grid is required for the " + family + " utility"};
            return make_grid(base, 0.0, 0.0, 1);
        }
        const auto range = parse_grid_range(grid);
        return make_grid(base, range.lo, range.hi, range.count);
    }
};

void finish_set(CoverageSet& set, const MdpSource::Loaded& loaded, const std::string& out_path,
                const std::string& store_dir, std::ostream& out) {
    set.mdp_ref = loaded.ref;
    if (!store_dir.empty()) {
        CoverageStore store(store_dir);
        const auto id = store.save(set, loaded.mdp);
        out << id << "\n";
        if (!out_path.empty())
            emit(store.load_json(id), out_path, out);
        return;
    }
    emit(to_json(set), out_path, out);
}

void show(const CoverageSet& set, std::ostream& out) {
    out << "criterion " << criterion_name(set.criterion) << ", solver " << set.solver << ", utility "
        << family_name(set.grid.family()) << ", " << set.entries.size() << " grid points, "
        << set.distinct_policy_count() << " distinct policies\n";
    out << "index\tparam\tvalue\texpected_return\tpolicy\n";
    for (std::size_t i = 0; i < set.entries.size(); ++i) {
        const auto& e = set.entries[i];
        out << i << '\t' << format_decimal(e.param) << '\t' << format_decimal(e.record.value) << '\t'
            << format_decimal(e.record.expected_return) << '\t';
        if (e.duplicate_of)
            out << "same as " << *e.duplicate_of;
        else
            out << e.policy.action_map().size() << " decision points";
        out << '\n';
    }
    const auto switches = set.switch_indices();
    out << "switches at:";
    for (auto i : switches)
        out << ' ' << i;
    out << (switches.empty() ? " none\n" : "\n");
}

ApiServer* active_server = nullptr;

extern "C" void on_signal(int) {
    if (active_server)
        active_server->stop();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Utility-based RL workbench: environments, exact and learned coverage sets, HTTP API", "ubrl"};
    app.require_subcommand(1);

    // env make / env list
    auto* env_cmd = app.add_subcommand("env", "Environment generators");
    env_cmd->require_subcommand(1);
    auto* env_make = env_cmd->add_subcommand("make", "Write a named environment's MDP as JSON");
    std::string env_name, env_out;
    std::vector<std::string> env_params;
    env_make->add_option("name", env_name, "Environment name")->required();
    env_make->add_option("--param", env_params, "Parameter key=value (repeatable)");
    env_make->add_option("--out", env_out, "Output file (default stdout)");
    auto* env_list = env_cmd->add_subcommand("list", "List environments with their default parameters");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Exact coverage set over a utility grid");
    MdpSource solve_src;
    UtilityChoice solve_util;
    std::string solve_criterion, solve_solver, solve_out, solve_store;
    unsigned solve_threads = 1;
    solve_src.add_to(solve_cmd);
    solve_util.add_to(solve_cmd);
    solve_cmd->add_option("--criterion", solve_criterion, "ser, esr, cvar or per-gamma")->required();
    solve_cmd->add_option("--solver", solve_solver, "exact, augmented-vi or per-gamma-vi");
    solve_cmd->add_option("--threads", solve_threads, "Grid points solved concurrently")->check(CLI::Range(1u, 256u));
    solve_cmd->add_option("--out", solve_out, "Output file (default stdout)");
    solve_cmd->add_option("--store", solve_store, "Save into this coverage store and print the id");

    // train
    auto* train_cmd = app.add_subcommand("train", "Learn a coverage set with the multi-policy learners");
    MdpSource train_src;
    UtilityChoice train_util;
    std::optional<std::uint64_t> train_seed;
    std::size_t train_episodes = 0;
    double train_step = 0.0, train_eps = -1.0;
    std::string train_config, train_schedule, train_log, train_out, train_store;
    train_src.add_to(train_cmd);
    train_util.add_to(train_cmd, false);
    train_cmd->add_option("--config", train_config, "Training config JSON (episodes, step_size, epsilon, seed, grid)");
    train_cmd->add_option("--seed", train_seed, "RNG seed (required unless the config has one)");
    train_cmd->add_option("--episodes", train_episodes, "Episode budget");
    train_cmd->add_option("--step-size", train_step, "Learning rate (floor of the harmonic schedule)");
    train_cmd->add_option("--epsilon", train_eps, "Exploration rate");
    train_cmd->add_option("--schedule", train_schedule, "fixed or harmonic")
        ->check(CLI::IsMember({"fixed", "harmonic"}));
    train_cmd->add_option("--log", train_log, "Write per-episode CSV training log");
    train_cmd->add_option("--out", train_out, "Output file (default stdout)");
    train_cmd->add_option("--store", train_store, "Save into this coverage store and print the id");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "CVaR-optimal policies over an alpha grid");
    MdpSource sweep_src;
    std::string sweep_grid, sweep_mode = "exact", sweep_out, sweep_store;
    std::uint64_t sweep_seed = 0;
    std::size_t sweep_episodes = 0;
    sweep_src.add_to(sweep_cmd);
    sweep_cmd->add_option("--grid", sweep_grid, "Alpha grid lo:hi:count")->required();
    sweep_cmd->add_option("--mode", sweep_mode, "exact or dist-td")->check(CLI::IsMember({"exact", "dist-td"}));
    sweep_cmd->add_option("--seed", sweep_seed, "RNG seed for dist-td");
    sweep_cmd->add_option("--episodes", sweep_episodes, "Episode budget per policy for dist-td");
    sweep_cmd->add_option("--out", sweep_out, "Output file (default stdout)");
    sweep_cmd->add_option("--store", sweep_store, "Save into this coverage store and print the id");

    // show
    auto* show_cmd = app.add_subcommand("show", "Summarise a coverage set");
    std::string show_target, show_store;
    show_cmd->add_option("target", show_target, "coverage.json path, or an id with --store")->required();
    show_cmd->add_option("--store", show_store, "Coverage store directory");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    std::optional<int> serve_port;
    std::string serve_host = "127.0.0.1", serve_store = "ubrl-store", serve_static;
    serve_cmd->add_option("--port", serve_port, "Port (default UBRL_PORT or 8080)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", serve_host, "Bind address");
    serve_cmd->add_option("--store", serve_store, "Coverage store directory");
    serve_cmd->add_option("--static", serve_static, "Directory served under /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (env_make->parsed()) {
            emit(to_json(make_environment(env_name, key_values(env_params)).mdp), env_out, out);
        } else if (env_list->parsed()) {
            for (const auto& name : environment_names())
                out << name << '\t' << make_environment(name).params.dump() << '\n';
        } else if (solve_cmd->parsed()) {
            const auto loaded = solve_src.load();
            const auto grid = solve_util.make();
            const auto criterion = parse_criterion(solve_criterion);
            const auto solver = solve_solver.empty() ? default_solver(grid.base, criterion) : parse_solver(solve_solver);
            CoverageOptions options;
            options.threads = solve_threads;
            auto set = solve_coverage_set(loaded.mdp, grid, criterion, solver, options);
            finish_set(set, loaded, solve_out, solve_store, out);
        } else if (train_cmd->parsed()) {
            const auto loaded = train_src.load();
            const nlohmann::json file = train_config.empty() ? nlohmann::json::object() : read_json(train_config);
            if (!train_seed && !file.contains("seed"))
                throw Usage{"--seed is required"};
            ParameterGrid grid;
            if (train_util.family.empty()) {
                if (!file.contains("grid"))
                    throw Usage{"--utility is required"};
                grid = grid_from_json(file.at("grid"));
            } else {
                grid = train_util.make();
            }
            auto config = file.empty() ? default_training_config(train_src.env, grid.family())
                                       : training_config_from_json(file);
            if (train_seed)
                config.seed = *train_seed;
            if (train_episodes > 0)
                config.episodes = train_episodes;
            if (train_step > 0.0)
                config.step_size = train_step;
            if (train_eps >= 0.0)
                config.epsilon = train_eps;
            if (!train_schedule.empty())
                config.schedule = train_schedule == "fixed" ? StepSchedule::Fixed : StepSchedule::Harmonic;

            std::ofstream log;
            LearnerHooks hooks;
            if (!train_log.empty()) {
                log.open(train_log);
                if (!log)
                    fail(ErrorKind::NotFound, "cannot write " + train_log);
                log << "episode,grid_index,return,utility\n";
                hooks.on_episode = [&log](const TrainingLogRow& row) {
                    log << row.episode << ',' << row.grid_index << ',' << format_decimal(row.episode_return) << ','
                        << format_decimal(row.utility) << '\n';
                };
            }
            auto result = grid.family() == UtilityFamily::Discount
                              ? train_multi_gamma_q(loaded.mdp, grid, config, hooks)
                              : train_conditioned_q(loaded.mdp, grid, config, hooks);
            finish_set(result.coverage, loaded, train_out, train_store, out);
        } else if (sweep_cmd->parsed()) {
            const auto loaded = sweep_src.load();
            const auto range = parse_grid_range(sweep_grid);
            const auto grid = make_grid(UtilityFamily::Cvar, range.lo, range.hi, range.count);
            DistributionalConfig config;
            config.seed = sweep_seed;
            if (sweep_episodes > 0)
                config.max_episodes = sweep_episodes;
            auto set = cvar_policy_sweep(loaded.mdp, grid, sweep_mode == "exact" ? SweepMode::ExactEnum : SweepMode::DistTD,
                                         config);
            finish_set(set, loaded, sweep_out, sweep_store, out);
        } else if (show_cmd->parsed()) {
            if (!show_store.empty())
                show(CoverageStore(show_store).load(show_target), out);
            else
                show(coverage_from_json(read_json(show_target)), out);
        } else if (serve_cmd->parsed()) {
            ServerOptions options;
            options.store_root = serve_store;
            if (!serve_static.empty())
                options.static_dir = serve_static;
            ApiServer server(options);
            const int port = server.bind(serve_host, resolve_port(serve_port));
            if (port < 0)
                fail(ErrorKind::ConfigError, "cannot bind " + serve_host);
            active_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            err << "listening on http://" << serve_host << ':' << port << "\n";
            server.listen();
            active_server = nullptr;
        }
    } catch (const Usage& e) {
        err << "error: " << e.message << "\n\n" << app.help();
        return 2;
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace ubrl::cli
