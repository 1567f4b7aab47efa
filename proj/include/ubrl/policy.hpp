#pragma once

#include "ubrl/mdp.hpp"
#include "ubrl/utility.hpp"

#include <json.hpp>

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ubrl {

/// What a policy's decision depends on besides the environment state.
enum class Augmentation {
    None,      ///< stationary: state only
    Timestep,  ///< (timestep, state)
    AccReturn, ///< (timestep, state, accumulated discounted return)
};

std::string_view augmentation_name(Augmentation aug);
Augmentation parse_augmentation(std::string_view name);

/// Projection of an AugmentedState onto the parts a policy looks at. Unused
/// parts are zero.
struct DecisionKey {
    int timestep = 0;
    int state = 0;
    double acc = 0.0;

    friend auto operator<=>(const DecisionKey&, const DecisionKey&) = default;
    friend bool operator==(const DecisionKey&, const DecisionKey&) = default;
};

struct PolicyMetadata {
    std::string solver;
    std::optional<UtilitySpec> utility;
};

/**
 * Deterministic tabular policy. The action map may be partial; it only has
 * to cover the decision points reachable under the policy itself.
 */
class Policy {
public:
    Policy() = default;
    explicit Policy(Augmentation augmentation, double bin_width = 0.0);

    Augmentation augmentation() const { return augmentation_; }
    double bin_width() const { return bin_width_; }

    DecisionKey key(const AugmentedState& st) const;
    DecisionKey key(int timestep, int state, double acc) const { return key(AugmentedState{state, acc, timestep}); }

    std::optional<int> action(const AugmentedState& st) const;
    /// Throws Error(PolicyUndefined) when the map has no entry.
    int require_action(const AugmentedState& st) const;

    void set(const DecisionKey& key, int action) { actions_[key] = action; }
    void erase(const DecisionKey& key) { actions_.erase(key); }
    bool has(const DecisionKey& key) const { return actions_.count(key) > 0; }
    const std::map<DecisionKey, int>& action_map() const { return actions_; }

    /// Successor augmented state after receiving `reward` on the step taken
    /// at st.timestep. Uses the policy's bin width for the accumulator.
    AugmentedState advance(const AugmentedState& st, int next_state, double discount_pow, double reward) const;

    PolicyMetadata metadata;

    /// Action maps only; metadata is ignored.
    bool same_actions(const Policy& other) const {
        return augmentation_ == other.augmentation_ && bin_width_ == other.bin_width_ && actions_ == other.actions_;
    }

private:
    Augmentation augmentation_ = Augmentation::None;
    double bin_width_ = 0.0;
    std::map<DecisionKey, int> actions_;
};

/// Lexicographic order over the (key, action) sequences; the tie-break rule
/// for equally valued policies.
bool action_map_less(const Policy& a, const Policy& b);

/// Decision points reachable from the initial distribution within the
/// horizon when following the policy. Throws PolicyUndefined on a gap.
std::vector<DecisionKey> reachable_keys(const Mdp& mdp, const Policy& policy);

/// Copy of the policy keeping only its reachable decision points.
Policy restrict_to_reachable(const Mdp& mdp, const Policy& policy);

/// Equal behaviour: identical action maps once both are restricted to the
/// decision points reachable under themselves.
bool same_reachable_actions(const Mdp& mdp, const Policy& a, const Policy& b);

nlohmann::json to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

} // namespace ubrl
