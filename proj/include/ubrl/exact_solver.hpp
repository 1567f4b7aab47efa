#pragma once

// Ground-truth solvers: exhaustive distribution and policy enumeration,
// SER/ESR evaluation, finite-horizon value iteration and dynamic programming
// over reward-augmented states.

#include "ubrl/distribution.hpp"
#include "ubrl/mdp.hpp"
#include "ubrl/policy.hpp"
#include "ubrl/utility.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace ubrl {

enum class Criterion { SER, ESR, CVaR, PerGamma };

std::string_view criterion_name(Criterion c);
Criterion parse_criterion(std::string_view name);

struct EvaluationRecord {
    Criterion criterion = Criterion::SER;
    UtilitySpec utility;
    double value = 0.0;
    double expected_return = 0.0;
    std::optional<ReturnDistribution> distribution;
};

struct EnumerationLimits {
    std::size_t max_paths = 10'000'000;
    std::size_t max_policies = 1'000'000;
    std::size_t max_augmented_states = 1'000'000;
};

/// Exact distribution of sum_i gamma^i r_i over every trajectory of the
/// policy, discounting with `gamma` (the MDP's own when not given). Throws
/// ExplosionCap past `max_paths` trajectories.
ReturnDistribution enumerate_return_distribution(const Mdp& mdp, const Policy& policy,
                                                 std::optional<double> gamma = std::nullopt,
                                                 std::size_t max_paths = EnumerationLimits{}.max_paths);

using ScalarUtility = std::function<double(double)>;

/// u(E[Z]) and E[u(Z)] for an arbitrary scalar utility.
double ser_value(const ReturnDistribution& dist, const ScalarUtility& u);
double esr_value(const ReturnDistribution& dist, const ScalarUtility& u);

EvaluationRecord evaluate_ser(const Mdp& mdp, const Policy& policy, const UtilitySpec& spec,
                              const EnumerationLimits& limits = {});
EvaluationRecord evaluate_esr(const Mdp& mdp, const Policy& policy, const UtilitySpec& spec,
                              const EnumerationLimits& limits = {});
/// Dispatches on the criterion. CVaR needs a Cvar spec; PerGamma a Discount
/// spec (or Identity, which keeps the MDP's gamma).
EvaluationRecord evaluate(const Mdp& mdp, const Policy& policy, const UtilitySpec& spec, Criterion criterion,
                          const EnumerationLimits& limits = {});

/// Throws WrongFamily when the utility cannot be used with the criterion.
void check_criterion(const UtilitySpec& spec, Criterion criterion);

struct ValueIterationResult {
    Policy policy;                           ///< Timestep-augmented, all non-terminal (t, s)
    std::vector<std::vector<double>> values; ///< values[t][s], t = 0..horizon
    double value = 0.0;                      ///< sum_s mu(s) values[0][s]
};

/// Finite-horizon backward induction. Ties go to the lowest action index.
ValueIterationResult value_iteration(const Mdp& mdp, std::optional<double> gamma_override = std::nullopt);

struct AugmentedSolution {
    Policy policy; ///< AccReturn-augmented over every reachable (t, s, acc)
    std::map<DecisionKey, double> values;
    double value = 0.0;
};

/// Maximises E[u(sum_i gamma^i r_i)] by backward induction over
/// (timestep, state, accumulated return). bin_width = 0 tracks exact
/// accumulated returns; a positive width snaps them to a lattice, which
/// costs at most bin_width * Lipschitz(u) per step. Throws BinExplosion past
/// limits.max_augmented_states reachable points.
AugmentedSolution augmented_value_iteration(const Mdp& mdp, const UtilitySpec& spec, double bin_width = 0.0,
                                            const EnumerationLimits& limits = {});

/// Policy class searched by enumerate_policies: stationary for CVaR,
/// accumulated-return for ESR with a non-linear utility, timestep otherwise.
Augmentation policy_class_for(const UtilitySpec& spec, Criterion criterion);

/// Calls `visit` once per deterministic policy of the class, each defined
/// exactly on the decision points reachable under itself. Throws
/// ExplosionCap past `max_policies`.
void for_each_policy(const Mdp& mdp, Augmentation augmentation, std::size_t max_policies,
                     const std::function<void(const Policy&)>& visit);

struct RankedPolicy {
    Policy policy;
    double value = 0.0;
};

struct EnumerationResult {
    Policy best;
    EvaluationRecord record;
    std::vector<RankedPolicy> ranking; ///< best first; empty if not kept
    std::size_t policy_count = 0;
};

/// Brute-force optimum. Ties (within 1e-12 relative) go to the
/// lexicographically smallest action map.
EnumerationResult enumerate_policies(const Mdp& mdp, const UtilitySpec& spec, Criterion criterion,
                                     const EnumerationLimits& limits = {}, bool keep_ranking = true);

} // namespace ubrl
