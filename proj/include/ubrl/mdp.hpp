#pragma once

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace ubrl {

using RewardVector = std::vector<double>;

/// One branch of T[s][a]: the successor, its probability and the reward
/// vector R[s][a][s'].
struct Outcome {
    int next_state = 0;
    double prob = 0.0;
    RewardVector reward;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/**
 * Finite MDP with vector rewards (a MOMDP; every shipped scenario uses d = 1).
 *
 * transitions[s][a] lists the outcomes of taking a in s. Terminal states are
 * absorbing: their rows are a zero-reward self loop and an episode stops as
 * soon as one is entered. Episodes are also cut at `horizon` steps.
 */
struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    int reward_dim = 1;
    double gamma = 1.0;
    int horizon = 1;
    std::vector<double> initial_dist;
    std::vector<int> terminal_states;
    std::vector<std::vector<std::vector<Outcome>>> transitions;

    bool is_terminal(int state) const;
    const std::vector<Outcome>& outcomes(int state, int action) const {
        return transitions[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
    }

    friend bool operator==(const Mdp&, const Mdp&) = default;
};

/// Scalar-reward MDP, the input side of embed_scalar_as_momdp.
struct ScalarOutcome {
    int next_state = 0;
    double prob = 0.0;
    double reward = 0.0;
};

struct ScalarMdp {
    int num_states = 0;
    int num_actions = 0;
    double gamma = 1.0;
    int horizon = 1;
    std::vector<double> initial_dist;
    std::vector<int> terminal_states;
    std::vector<std::vector<std::vector<ScalarOutcome>>> transitions;
};

/// Empty iff the MDP is well formed.
using ValidationReport = std::vector<std::string>;

ValidationReport validate_mdp(const Mdp& mdp);

/// Throws Error(InvalidMdp) carrying the first few report lines.
void require_valid(const Mdp& mdp);

/// Throws Error(InvalidParams) unless reward_dim == 1.
void require_scalar(const Mdp& mdp);

Mdp embed_scalar_as_momdp(const ScalarMdp& mdp);
/// Idempotent on an already embedded (d = 1) MDP.
Mdp embed_scalar_as_momdp(const Mdp& mdp);

struct Step {
    int state = 0;
    int action = 0;
    RewardVector reward;
    int next_state = 0;

    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    std::vector<Step> steps;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Environment state plus the discounted scalar return accumulated so far
/// and the number of steps taken.
struct AugmentedState {
    int env_state = 0;
    double acc_return = 0.0;
    int timestep = 0;
};

/// gamma^0 .. gamma^(n-1), built by repeated multiplication. Every routine
/// that accumulates returns uses these same powers so that accumulated
/// returns computed along the same path agree bit for bit.
std::vector<double> discount_powers(double gamma, int n);

/// acc + discount_pow * reward, snapped to multiples of bin_width when
/// bin_width > 0.
double accumulate_return(double acc, double discount_pow, double reward, double bin_width = 0.0);

RewardVector discounted_return(const Trajectory& traj, double gamma);

/// Scalar rewards of a d = 1 trajectory.
std::vector<double> scalar_rewards(const Trajectory& traj);

nlohmann::json to_json(const Mdp& mdp);
nlohmann::json to_json(const Trajectory& traj);
/// Accepts scalar or vector "r" entries; scalars are embedded as d = 1.
Mdp mdp_from_json(const nlohmann::json& j);

} // namespace ubrl
