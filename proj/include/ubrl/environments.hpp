#pragma once

#include "ubrl/mdp.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace ubrl {

/// 1-D corridor starting at cell 0 with actions left / right / collect.
/// Collecting at a nugget cell pays its value once and ends the episode.
/// gamma is 1: discounting is left to the utility.
struct GoldNuggetsParams {
    int corridor_len = 8;
    int near_pos = 1;
    double near_val = 2.0;
    int far_pos = 6;
    double far_val = 10.0;
    int horizon = 10;
};

/// One state; each step either mines base_yield units (Normal) or
/// risky_yield_hi w.p. p_hi else risky_yield_lo (Risky). Reward is units.
struct MiningWorldParams {
    double base_yield = 2.0;
    double risky_yield_hi = 6.0;
    double risky_yield_lo = 0.0;
    double p_hi = 0.5;
    int horizon = 5;
};

/// Fork at the start: action 0 walks a safe corridor of safe_len cells
/// paying safe_reward at its end, action 1 takes a risky path of risky_len
/// hazardous steps paying risky_reward, where every step falls into a
/// zero-reward pit with hazard_prob. Inside a path both actions advance.
struct RiskyPathParams {
    int safe_len = 4;
    double safe_reward = 6.0;
    double risky_reward = 10.0;
    double hazard_prob = 0.3;
    int horizon = 6;
    int risky_len = 1;
};

/// State is the number of units harvested. Action 0 harvests one unit
/// (reward 1) until max_units, action 1 idles (reward 0).
struct HarvestWorldParams {
    int max_units = 5;
    int horizon = 5;
};

Mdp make_gold_nuggets(const GoldNuggetsParams& p = {});
Mdp make_mining_world(const MiningWorldParams& p = {});
Mdp make_risky_path(const RiskyPathParams& p = {});
Mdp make_harvest_world(const HarvestWorldParams& p = {});

namespace gold_nuggets {
enum Action { Left = 0, Right = 1, Collect = 2 };
}
namespace mining_world {
enum Action { Normal = 0, Risky = 1 };
}
namespace risky_path {
enum Action { Safe = 0, Risky = 1 };
/// State indices of the generated instance.
int goal_state(const RiskyPathParams& p);
int pit_state(const RiskyPathParams& p);
} // namespace risky_path
namespace harvest_world {
enum Action { Harvest = 0, Idle = 1 };
}

struct EnvironmentSpec {
    std::string name;
    nlohmann::json params; ///< full parameter set used, decimal strings
    Mdp mdp;
    std::vector<std::string> action_names;
    std::string doc;
};

/// Names accepted by make_environment.
std::vector<std::string> environment_names();

/// Builds a named environment, overriding defaults with `overrides`
/// (decimal strings or numbers). Unknown names throw NotFound, unknown
/// parameters InvalidParams.
EnvironmentSpec make_environment(std::string_view name, const nlohmann::json& overrides = nlohmann::json::object());

nlohmann::json to_json(const EnvironmentSpec& env);

} // namespace ubrl
