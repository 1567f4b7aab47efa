#pragma once

// Request-level glue shared by the CLI and the HTTP API: parse a solve
// request, pick a solver, run it.

#include "ubrl/coverage.hpp"
#include "ubrl/environments.hpp"
#include "ubrl/exact_solver.hpp"
#include "ubrl/utility.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace ubrl {

struct GridRange {
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;
};

/// "lo:hi:count", e.g. "0:1:5". Throws ParseError.
GridRange parse_grid_range(std::string_view text);

struct SolveRequest {
    std::string env;
    nlohmann::json params = nlohmann::json::object();
    UtilitySpec utility;
    GridRange grid;
    Criterion criterion = Criterion::ESR;
    std::optional<SolverKind> solver;
    unsigned threads = 1;
};

/// {"env", "params"?, "utility": {"family", "params"?}, "grid": {"lo","hi","count"}
/// or "lo:hi:count", "criterion", "solver"?}. Throws ParseError on shape
/// errors; parameter errors surface when the request is run.
SolveRequest solve_request_from_json(const nlohmann::json& j);

/// Per-gamma grids use per-gamma VI, ESR with a non-linear utility the
/// augmented VI, everything else enumeration.
SolverKind default_solver(const UtilitySpec& utility, Criterion criterion);

struct SolveOutcome {
    EnvironmentSpec env;
    CoverageSet set;
};

SolveOutcome run_solve(const SolveRequest& request);

/// {"environment": name, "params": {...}}
nlohmann::json environment_ref(const EnvironmentSpec& env);

} // namespace ubrl
