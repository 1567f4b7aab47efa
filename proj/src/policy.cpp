#include "ubrl/policy.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace ubrl {

std::string_view augmentation_name(Augmentation aug) {
    switch (aug) {
    case Augmentation::None: return "none";
    case Augmentation::Timestep: return "timestep";
    case Augmentation::AccReturn: return "acc_return";
    }
    return "none";
}

Augmentation parse_augmentation(std::string_view name) {
    for (auto a : {Augmentation::None, Augmentation::Timestep, Augmentation::AccReturn})
        if (augmentation_name(a) == name)
            return a;
    fail(ErrorKind::ParseError, "unknown augmentation '" + std::string(name) + "'");
}

Policy::Policy(Augmentation augmentation, double bin_width) : augmentation_(augmentation), bin_width_(bin_width) {
    if (bin_width < 0.0)
        fail(ErrorKind::InvalidParams, "bin width must be non-negative");
}

DecisionKey Policy::key(const AugmentedState& st) const {
    switch (augmentation_) {
    case Augmentation::None: return {0, st.env_state, 0.0};
    case Augmentation::Timestep: return {st.timestep, st.env_state, 0.0};
    case Augmentation::AccReturn: return {st.timestep, st.env_state, st.acc_return == 0.0 ? 0.0 : st.acc_return};
    }
    return {};
}

std::optional<int> Policy::action(const AugmentedState& st) const {
    auto it = actions_.find(key(st));
    if (it == actions_.end())
        return std::nullopt;
    return it->second;
}

int Policy::require_action(const AugmentedState& st) const {
    if (auto a = action(st))
        return *a;
    fail(ErrorKind::PolicyUndefined, "policy has no action for state " + std::to_string(st.env_state) +
                                         " at timestep " + std::to_string(st.timestep) + " with return " +
                                         format_decimal(st.acc_return));
}

AugmentedState Policy::advance(const AugmentedState& st, int next_state, double discount_pow, double reward) const {
    return {next_state, accumulate_return(st.acc_return, discount_pow, reward, bin_width_), st.timestep + 1};
}

bool action_map_less(const Policy& a, const Policy& b) {
    return std::lexicographical_compare(a.action_map().begin(), a.action_map().end(), b.action_map().begin(),
                                        b.action_map().end());
}

std::vector<DecisionKey> reachable_keys(const Mdp& mdp, const Policy& policy) {
    const bool track_acc = policy.augmentation() == Augmentation::AccReturn;
    const auto powers = discount_powers(mdp.gamma, mdp.horizon);

    std::set<DecisionKey> keys;
    std::set<std::pair<int, double>> frontier;
    for (int s = 0; s < mdp.num_states; ++s)
        if (mdp.initial_dist[static_cast<std::size_t>(s)] > 0.0)
            frontier.insert({s, 0.0});

    for (int t = 0; t < mdp.horizon && !frontier.empty(); ++t) {
        std::set<std::pair<int, double>> next;
        for (const auto& [s, acc] : frontier) {
            if (mdp.is_terminal(s))
                continue;
            const AugmentedState st{s, acc, t};
            const int a = policy.require_action(st);
            keys.insert(policy.key(st));
            for (const Outcome& o : mdp.outcomes(s, a)) {
                if (o.prob <= 0.0)
                    continue;
                const double acc2 = track_acc ? policy.advance(st, o.next_state, powers[static_cast<std::size_t>(t)],
                                                               o.reward.front())
                                                    .acc_return
                                              : 0.0;
                next.insert({o.next_state, acc2});
            }
        }
        frontier = std::move(next);
    }
    return {keys.begin(), keys.end()};
}

Policy restrict_to_reachable(const Mdp& mdp, const Policy& policy) {
    Policy out(policy.augmentation(), policy.bin_width());
    out.metadata = policy.metadata;
    for (const DecisionKey& k : reachable_keys(mdp, policy))
        out.set(k, policy.action_map().at(k));
    return out;
}

bool same_reachable_actions(const Mdp& mdp, const Policy& a, const Policy& b) {
    return restrict_to_reachable(mdp, a).same_actions(restrict_to_reachable(mdp, b));
}

nlohmann::json to_json(const Policy& policy) {
    auto actions = nlohmann::json::array();
    for (const auto& [k, a] : policy.action_map()) {
        nlohmann::json e;
        if (policy.augmentation() != Augmentation::None)
            e["t"] = k.timestep;
        e["s"] = k.state;
        if (policy.augmentation() == Augmentation::AccReturn)
            e["acc"] = format_decimal(k.acc);
        e["a"] = a;
        actions.push_back(std::move(e));
    }
    nlohmann::json meta = {{"solver", policy.metadata.solver}};
    if (policy.metadata.utility)
        meta["utility"] = to_json(*policy.metadata.utility);
    return {{"augmentation", std::string(augmentation_name(policy.augmentation()))},
            {"bin_width", format_decimal(policy.bin_width())},
            {"actions", std::move(actions)},
            {"metadata", std::move(meta)}};
}

Policy policy_from_json(const nlohmann::json& j) {
    try {
        Policy policy(parse_augmentation(j.at("augmentation").get<std::string>()),
                      j.contains("bin_width") ? json_decimal(j.at("bin_width")) : 0.0);
        for (const auto& e : j.at("actions")) {
            DecisionKey k;
            k.timestep = e.value("t", 0);
            k.state = e.at("s").get<int>();
            k.acc = e.contains("acc") ? json_decimal(e.at("acc")) : 0.0;
            policy.set(k, e.at("a").get<int>());
        }
        if (j.contains("metadata")) {
            const auto& meta = j.at("metadata");
            policy.metadata.solver = meta.value("solver", "");
            if (meta.contains("utility"))
                policy.metadata.utility = utility_from_json(meta.at("utility"));
        }
        return policy;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed policy JSON: ") + e.what());
    }
}

} // namespace ubrl
