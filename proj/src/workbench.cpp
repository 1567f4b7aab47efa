#include "ubrl/workbench.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <charconv>

namespace ubrl {

GridRange parse_grid_range(std::string_view text) {
    const auto first = text.find(':');
    const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
    if (second == std::string_view::npos || text.find(':', second + 1) != std::string_view::npos)
        fail(ErrorKind::ParseError, "grid must look like lo:hi:count, got '" + std::string(text) + "'");
    GridRange g;
    g.lo = parse_decimal(text.substr(0, first));
    g.hi = parse_decimal(text.substr(first + 1, second - first - 1));
    const auto count = text.substr(second + 1);
    auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), g.count);
    if (ec != std::errc() || ptr != count.data() + count.size())
        fail(ErrorKind::ParseError, "grid count must be an integer, got '" + std::string(count) + "'");
    return g;
}

SolveRequest solve_request_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object())
            fail(ErrorKind::ParseError, "solve request must be a JSON object");
        SolveRequest r;
        r.env = j.at("env").get<std::string>();
        r.params = j.value("params", nlohmann::json::object());
        r.utility = utility_from_json(j.at("utility"));
        const auto& grid = j.at("grid");
        if (grid.is_string()) {
            r.grid = parse_grid_range(grid.get<std::string>());
        } else {
            r.grid.lo = json_decimal(grid.at("lo"));
            r.grid.hi = json_decimal(grid.at("hi"));
            r.grid.count = grid.at("count").get<int>();
        }
        r.criterion = parse_criterion(j.at("criterion").get<std::string>());
        if (j.contains("solver"))
            r.solver = parse_solver(j.at("solver").get<std::string>());
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed solve request: ") + e.what());
    }
}

SolverKind default_solver(const UtilitySpec& utility, Criterion criterion) {
    if (criterion == Criterion::PerGamma)
        return SolverKind::PerGammaVI;
    if (criterion == Criterion::ESR && !is_linear(utility))
        return SolverKind::AugmentedVI;
    return SolverKind::Exact;
}

nlohmann::json environment_ref(const EnvironmentSpec& env) { return {{"environment", env.name}, {"params", env.params}}; }

SolveOutcome run_solve(const SolveRequest& request) {
    SolveOutcome out;
    out.env = make_environment(request.env, request.params);
    const auto grid = make_grid(request.utility, request.grid.lo, request.grid.hi, request.grid.count);
    CoverageOptions options;
    options.threads = request.threads;
    out.set = solve_coverage_set(out.env.mdp, grid, request.criterion,
                                 request.solver.value_or(default_solver(request.utility, request.criterion)), options);
    out.set.mdp_ref = environment_ref(out.env);
    return out;
}

} // namespace ubrl
