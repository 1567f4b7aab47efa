#pragma once

// Sample-based multi-policy learners. One Q-table per grid point; every
// observed transition updates every table (shared experience), so a single
// training run yields the whole coverage set.

#include "ubrl/coverage.hpp"
#include "ubrl/mdp.hpp"
#include "ubrl/policy.hpp"
#include "ubrl/utility.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string_view>
#include <vector>

namespace ubrl {

enum class StepSchedule {
    Fixed,    ///< constant step_size
    Harmonic, ///< max(step_size, 1 / visits(key, action))
};

struct TrainingConfig {
    std::size_t episodes = 0;
    double step_size = 0.1;
    double epsilon = 0.2;
    std::uint64_t seed = 0;
    StepSchedule schedule = StepSchedule::Fixed;
};

/// Throws ConfigError for a zero budget, step_size outside (0,1] or
/// epsilon outside [0,1].
void validate_config(const TrainingConfig& config);

nlohmann::json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::json& j);

/// Budgets and rates under which the learners reproduce the exact coverage
/// sets of the shipped environments.
TrainingConfig default_training_config(std::string_view env_name, UtilityFamily family);

struct ConditionedQTable {
    ParameterGrid grid;
    Augmentation augmentation = Augmentation::Timestep;
    int num_actions = 0;
    std::map<DecisionKey, std::size_t> rows;
    std::vector<std::vector<double>> q; ///< q[grid point][row * num_actions + action]
    std::vector<std::size_t> visits;    ///< per row * num_actions + action, shared by all tables

    /// 0 for decision points never visited.
    double value(std::size_t point, const DecisionKey& key, int action) const;
    double max_value(std::size_t point, const DecisionKey& key) const;
    /// Lowest action index among those within 1e-9 of the best.
    int greedy_action(std::size_t point, const DecisionKey& key) const;
    /// Greedy policy over the decision points it reaches.
    Policy greedy_policy(const Mdp& mdp, std::size_t point) const;
};

struct TrainingLogRow {
    std::size_t episode = 0;
    std::size_t grid_index = 0;
    double episode_return = 0.0;
    double utility = 0.0;
};

struct LearnerHooks {
    /// Called whenever table `table` computes a utility-based target, with
    /// the utility it used.
    std::function<void(std::size_t table, const UtilitySpec& spec)> on_utility_target;
    std::function<void(const TrainingLogRow&)> on_episode;
};

struct TrainingResult {
    ConditionedQTable table;
    CoverageSet coverage;
};

/**
 * Utility-conditioned Q-learning under the ESR criterion. Each episode
 * draws a grid point uniformly and behaves epsilon-greedily for it; the
 * transition then updates every grid point's table. Non-linear utilities
 * use (timestep, state, accumulated return) keys with zero intermediate
 * reward and terminal target u(acc); Identity uses timestep keys and the
 * usual reward backup.
 */
TrainingResult train_conditioned_q(const Mdp& mdp, const ParameterGrid& grid, const TrainingConfig& config,
                                   const LearnerHooks& hooks = {});

/// Q-learning for a grid of discount utilities: table j backs up
/// r + gamma_j * max_a Q_j(t + 1, s', a).
TrainingResult train_multi_gamma_q(const Mdp& mdp, const ParameterGrid& gamma_grid, const TrainingConfig& config,
                                   const LearnerHooks& hooks = {});

} // namespace ubrl
