#include "ubrl/environments.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <variant>

namespace ubrl {

namespace {

Mdp blank(int states, int actions, double gamma, int horizon, int start) {
    Mdp mdp;
    mdp.num_states = states;
    mdp.num_actions = actions;
    mdp.reward_dim = 1;
    mdp.gamma = gamma;
    mdp.horizon = horizon;
    mdp.initial_dist.assign(static_cast<std::size_t>(states), 0.0);
    mdp.initial_dist[static_cast<std::size_t>(start)] = 1.0;
    mdp.transitions.assign(static_cast<std::size_t>(states),
                           std::vector<std::vector<Outcome>>(static_cast<std::size_t>(actions)));
    return mdp;
}

void add(Mdp& mdp, int s, int a, int next, double prob, double reward) {
    mdp.transitions[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].push_back({next, prob, {reward}});
}

void make_absorbing(Mdp& mdp, int s) {
    mdp.terminal_states.push_back(s);
    for (int a = 0; a < mdp.num_actions; ++a)
        add(mdp, s, a, s, 1.0, 0.0);
}

} // namespace

Mdp make_gold_nuggets(const GoldNuggetsParams& p) {
    if (!(0 < p.near_pos && p.near_pos < p.far_pos && p.far_pos < p.corridor_len))
        fail(ErrorKind::InvalidGeometry, "need 0 < near_pos < far_pos < corridor_len");
    if (!(p.near_val < p.far_val))
        fail(ErrorKind::InvalidGeometry, "need near_val < far_val");
    if (p.horizon < p.far_pos)
        fail(ErrorKind::InvalidGeometry, "horizon must be at least far_pos");

    using namespace gold_nuggets;
    const int collected = p.corridor_len;
    Mdp mdp = blank(p.corridor_len + 1, 3, 1.0, p.horizon, 0);
    for (int x = 0; x < p.corridor_len; ++x) {
        add(mdp, x, Left, std::max(x - 1, 0), 1.0, 0.0);
        add(mdp, x, Right, std::min(x + 1, p.corridor_len - 1), 1.0, 0.0);
        if (x == p.near_pos)
            add(mdp, x, Collect, collected, 1.0, p.near_val);
        else if (x == p.far_pos)
            add(mdp, x, Collect, collected, 1.0, p.far_val);
        else
            add(mdp, x, Collect, x, 1.0, 0.0);
    }
    make_absorbing(mdp, collected);
    return mdp;
}

Mdp make_mining_world(const MiningWorldParams& p) {
    if (!(p.risky_yield_lo < p.base_yield && p.base_yield < p.risky_yield_hi))
        fail(ErrorKind::InvalidParams, "need risky_yield_lo < base_yield < risky_yield_hi");
    if (!(p.p_hi > 0.0 && p.p_hi < 1.0))
        fail(ErrorKind::InvalidParams, "p_hi must lie in (0,1)");
    if (p.horizon < 1)
        fail(ErrorKind::InvalidParams, "horizon must be positive");

    using namespace mining_world;
    Mdp mdp = blank(1, 2, 1.0, p.horizon, 0);
    add(mdp, 0, Normal, 0, 1.0, p.base_yield);
    add(mdp, 0, Risky, 0, p.p_hi, p.risky_yield_hi);
    add(mdp, 0, Risky, 0, 1.0 - p.p_hi, p.risky_yield_lo);
    return mdp;
}

int risky_path::goal_state(const RiskyPathParams& p) { return p.safe_len + p.risky_len; }
int risky_path::pit_state(const RiskyPathParams& p) { return p.safe_len + p.risky_len + 1; }

Mdp make_risky_path(const RiskyPathParams& p) {
    if (!(p.hazard_prob > 0.0 && p.hazard_prob < 1.0))
        fail(ErrorKind::InvalidParams, "hazard_prob must lie in (0,1)");
    if (p.safe_len < 0 || p.risky_len < 1)
        fail(ErrorKind::InvalidParams, "need safe_len >= 0 and risky_len >= 1");
    if (p.horizon < std::max(p.safe_len, p.risky_len) + 1)
        fail(ErrorKind::InvalidParams, "horizon too short to finish either path");

    const int goal = risky_path::goal_state(p);
    const int pit = risky_path::pit_state(p);
    Mdp mdp = blank(pit + 1, 2, 1.0, p.horizon, 0);

    // Safe corridor: start -> 1 -> ... -> safe_len -> goal.
    auto safe_next = [&](int cell) { return cell == p.safe_len ? goal : cell + 1; };
    auto safe_reward = [&](int cell) { return cell == p.safe_len ? p.safe_reward : 0.0; };
    // Risky cells sit after the corridor: safe_len + 1 .. safe_len + risky_len - 1.
    auto risky_step = [&](int from, int step, int action) {
        const bool last = step == p.risky_len;
        const int next = last ? goal : p.safe_len + step;
        add(mdp, from, action, next, 1.0 - p.hazard_prob, last ? p.risky_reward : 0.0);
        add(mdp, from, action, pit, p.hazard_prob, 0.0);
    };

    add(mdp, 0, risky_path::Safe, safe_next(0), 1.0, safe_reward(0));
    risky_step(0, 1, risky_path::Risky);
    for (int cell = 1; cell <= p.safe_len; ++cell)
        for (int a = 0; a < 2; ++a)
            add(mdp, cell, a, safe_next(cell), 1.0, safe_reward(cell));
    for (int step = 1; step < p.risky_len; ++step)
        for (int a = 0; a < 2; ++a)
            risky_step(p.safe_len + step, step + 1, a);
    make_absorbing(mdp, goal);
    make_absorbing(mdp, pit);
    return mdp;
}

Mdp make_harvest_world(const HarvestWorldParams& p) {
    if (p.max_units < 1 || p.max_units > p.horizon)
        fail(ErrorKind::InvalidParams, "need 1 <= max_units <= horizon");

    using namespace harvest_world;
    Mdp mdp = blank(p.max_units + 1, 2, 1.0, p.horizon, 0);
    for (int units = 0; units <= p.max_units; ++units) {
        if (units < p.max_units)
            add(mdp, units, Harvest, units + 1, 1.0, 1.0);
        else
            add(mdp, units, Harvest, units, 1.0, 0.0);
        add(mdp, units, Idle, units, 1.0, 0.0);
    }
    return mdp;
}

namespace {

using Field = std::variant<int*, double*>;

nlohmann::json apply_overrides(const std::map<std::string, Field>& fields, const nlohmann::json& overrides) {
    if (!overrides.is_object())
        fail(ErrorKind::InvalidParams, "environment parameters must be an object");
    for (const auto& [key, value] : overrides.items()) {
        auto it = fields.find(key);
        if (it == fields.end())
            fail(ErrorKind::InvalidParams, "unknown parameter '" + key + "'");
        double x = 0.0;
        try {
            x = json_decimal(value);
        } catch (const Error&) {
            fail(ErrorKind::InvalidParams, "parameter '" + key + "' is not a number");
        }
        if (auto* i = std::get_if<int*>(&it->second)) {
            if (x != std::floor(x) || std::abs(x) > 1e9)
                fail(ErrorKind::InvalidParams, "parameter '" + key + "' must be an integer");
            **i = static_cast<int>(x);
        } else {
            *std::get<double*>(it->second) = x;
        }
    }
    nlohmann::json used = nlohmann::json::object();
    for (const auto& [key, field] : fields)
        used[key] = std::visit([](auto* ptr) { return format_decimal(static_cast<double>(*ptr)); }, field);
    return used;
}

} // namespace

std::vector<std::string> environment_names() { return {"gold-nuggets", "harvest-world", "mining-world", "risky-path"}; }

EnvironmentSpec make_environment(std::string_view name, const nlohmann::json& overrides) {
    EnvironmentSpec env;
    env.name = std::string(name);
    if (name == "gold-nuggets") {
        GoldNuggetsParams p;
        env.params = apply_overrides({{"corridor_len", &p.corridor_len},
                                      {"near_pos", &p.near_pos},
                                      {"near_val", &p.near_val},
                                      {"far_pos", &p.far_pos},
                                      {"far_val", &p.far_val},
                                      {"horizon", &p.horizon}},
                                     overrides);
        env.mdp = make_gold_nuggets(p);
        env.action_names = {"left", "right", "collect"};
        env.doc = "Corridor with a small nugget close to the start and a large one further away; "
                  "which one is worth fetching depends on the discount applied to rewards.";
    } else if (name == "mining-world") {
        MiningWorldParams p;
        env.params = apply_overrides({{"base_yield", &p.base_yield},
                                      {"risky_yield_hi", &p.risky_yield_hi},
                                      {"risky_yield_lo", &p.risky_yield_lo},
                                      {"p_hi", &p.p_hi},
                                      {"horizon", &p.horizon}},
                                     overrides);
        env.mdp = make_mining_world(p);
        env.action_names = {"normal", "risky"};
        env.doc = "Each period choose normal operations or exploratory excavation; rewards are units mined, "
                  "money and contract penalties live in the mining utility.";
    } else if (name == "risky-path") {
        RiskyPathParams p;
        env.params = apply_overrides({{"safe_len", &p.safe_len},
                                      {"safe_reward", &p.safe_reward},
                                      {"risky_reward", &p.risky_reward},
                                      {"hazard_prob", &p.hazard_prob},
                                      {"horizon", &p.horizon},
                                      {"risky_len", &p.risky_len}},
                                     overrides);
        env.mdp = make_risky_path(p);
        env.action_names = {"safe", "risky"};
        env.doc = "A long safe corridor with a certain payoff against a short hazardous shortcut with a larger one.";
    } else if (name == "harvest-world") {
        HarvestWorldParams p;
        env.params = apply_overrides({{"max_units", &p.max_units}, {"horizon", &p.horizon}}, overrides);
        env.mdp = make_harvest_world(p);
        env.action_names = {"harvest", "idle"};
        env.doc = "Harvest one unit per step or idle; a satisficing utility decides how much is enough.";
    } else {
        fail(ErrorKind::NotFound, "unknown environment '" + std::string(name) + "'");
    }
    return env;
}

nlohmann::json to_json(const EnvironmentSpec& env) {
    return {{"name", env.name},
            {"params", env.params},
            {"action_names", env.action_names},
            {"doc", env.doc},
            {"mdp", to_json(env.mdp)}};
}

} // namespace ubrl
