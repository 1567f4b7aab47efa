#pragma once

#include "ubrl/exact_solver.hpp"
#include "ubrl/policy.hpp"
#include "ubrl/utility.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ubrl {

struct CoverageEntry {
    double param = 0.0;
    Policy policy;
    EvaluationRecord record;
    /// First index of the run of adjacent entries sharing this policy.
    std::optional<std::size_t> duplicate_of;
};

/// One optimal (or learned) policy per grid point.
struct CoverageSet {
    nlohmann::json mdp_ref = nlohmann::json::object();
    Criterion criterion = Criterion::SER;
    std::string solver;
    ParameterGrid grid;
    std::vector<CoverageEntry> entries;

    /// Number of distinct action maps across all entries.
    std::size_t distinct_policy_count() const;
    /// Grid indices i > 0 where entry i's policy differs from entry i - 1's.
    std::vector<std::size_t> switch_indices() const;
};

enum class SolverKind { Exact, AugmentedVI, PerGammaVI };

std::string_view solver_name(SolverKind kind);
SolverKind parse_solver(std::string_view name);

struct CoverageOptions {
    EnumerationLimits limits;
    /// Grid points solved concurrently; the result does not depend on it.
    unsigned threads = 1;
};

/**
 * Solves every grid point with the chosen solver and evaluates the result
 * exactly under the criterion. Policies are stored restricted to the
 * decision points they reach, and adjacent identical policies are flagged.
 * Solver errors are rethrown with the offending grid point in the message.
 */
CoverageSet solve_coverage_set(const Mdp& mdp, const ParameterGrid& grid, Criterion criterion, SolverKind solver,
                               const CoverageOptions& options = {});

/// Sets duplicate_of on every entry from the adjacent-policy runs.
void mark_duplicates(CoverageSet& set);

/// Builds an entry from a solved policy: restricts it, evaluates it exactly.
CoverageEntry make_entry(const Mdp& mdp, double param, const Policy& policy, const UtilitySpec& spec,
                         Criterion criterion, const EnumerationLimits& limits = {});

nlohmann::json to_json(const EvaluationRecord& rec);
nlohmann::json to_json(const CoverageSet& set);
CoverageSet coverage_from_json(const nlohmann::json& j);

} // namespace ubrl
