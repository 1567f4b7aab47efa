#pragma once

// Categorical distributional TD evaluation and the CVaR policy sweep.

#include "ubrl/coverage.hpp"
#include "ubrl/distribution.hpp"
#include "ubrl/exact_solver.hpp"
#include "ubrl/mdp.hpp"
#include "ubrl/policy.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace ubrl {

struct DistributionalConfig {
    std::size_t num_atoms = 101;
    /// Support bounds; default to the smallest and largest return reachable
    /// from any (timestep, state), widened to include 0.
    std::optional<double> v_min;
    std::optional<double> v_max;
    std::size_t max_episodes = 20'000;
    /// Episodes between convergence checks.
    std::size_t sweep_episodes = 1'000;
    /// Stop once no estimate moved by more than this in total variation
    /// over a sweep.
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
};

/// Smallest and largest discounted return obtainable from any (t, s),
/// over all action choices, together with 0.
std::pair<double, double> return_bounds(const Mdp& mdp);

struct CategoricalEstimate {
    std::vector<double> atoms;
    /// Return distribution from each visited (timestep, state[, acc]) under
    /// the evaluated policy, as probabilities over `atoms`.
    std::map<DecisionKey, std::vector<double>> probs;
    double max_mass_error = 0.0; ///< largest |sum p - 1| seen after an update
    std::size_t episodes = 0;
    bool converged = false;

    /// Mixture of the start-state estimates under the initial distribution.
    ReturnDistribution initial_distribution(const Mdp& mdp) const;
};

/// Projects the distribution of `shift + scale * Z` (Z given as
/// probabilities over `atoms`) back onto `atoms`, splitting each mass
/// between its two neighbours. Throws SupportTooNarrow when a shifted atom
/// falls outside the support.
std::vector<double> project_categorical(const std::vector<double>& atoms, const std::vector<double>& probs,
                                        double shift, double scale);

/**
 * Evaluates a fixed policy's return distribution by sampling episodes and
 * mixing each projected one-step target into the estimate with weight
 * 1/visits. Transitions of an episode are processed last to first.
 */
CategoricalEstimate evaluate_distribution_td(const Mdp& mdp, const Policy& policy,
                                             const DistributionalConfig& config = {});

enum class SweepMode { ExactEnum, DistTD };

/**
 * CVaR-optimal stationary policy for every alpha in the grid. ExactEnum
 * enumerates and evaluates every policy exactly; DistTD ranks the same
 * candidates by the CVaR of their TD-estimated distributions. Either way
 * each entry carries the exact evaluation of the chosen policy.
 */
CoverageSet cvar_policy_sweep(const Mdp& mdp, const ParameterGrid& alpha_grid, SweepMode mode,
                              const DistributionalConfig& config = {}, const EnumerationLimits& limits = {});

} // namespace ubrl
