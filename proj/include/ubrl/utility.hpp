#pragma once

#include "ubrl/distribution.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ubrl {

namespace utility {

struct Identity {
    friend bool operator==(const Identity&, const Identity&) = default;
};

/// Contract utility over mined units x:
///   price * x - [x < contract_qty] * (penalty + harm)
struct Mining {
    double price = 1.0;
    double penalty = 4.0;
    double harm = 0.0;
    double contract_qty = 10.0;

    friend bool operator==(const Mining&, const Mining&) = default;
};

/// Conditional value at risk of the return distribution, alpha in (0, 1].
struct Cvar {
    double alpha = 1.0;

    friend bool operator==(const Cvar&, const Cvar&) = default;
};

/// Sum of gamma^i r_i over the per-step rewards, gamma in [0, 1].
struct Discount {
    double gamma = 1.0;

    friend bool operator==(const Discount&, const Discount&) = default;
};

/// -|target - x|: peaks at the target return and falls off on both sides.
struct Satisficing {
    double target = 0.0;

    friend bool operator==(const Satisficing&, const Satisficing&) = default;
};

} // namespace utility

using UtilitySpec =
    std::variant<utility::Identity, utility::Mining, utility::Cvar, utility::Discount, utility::Satisficing>;

enum class UtilityFamily { Identity, Mining, Cvar, Discount, Satisficing };

/// What a family's utility is applied to.
enum class UtilityInput { ScalarReturn, Distribution, RewardSequence };

UtilityFamily family_of(const UtilitySpec& spec);
UtilityInput applies_to(UtilityFamily family);
inline UtilityInput applies_to(const UtilitySpec& spec) { return applies_to(family_of(spec)); }

std::string_view family_name(UtilityFamily family);
/// Throws Error(ParseError) for unknown names.
UtilityFamily parse_family(std::string_view name);

/// Default parameters for the family (Mining defaults match MiningWorld).
UtilitySpec default_spec(UtilityFamily family);

/// Throws InvalidAlpha / InvalidParams when the parameters break the
/// family's invariants.
void validate_spec(const UtilitySpec& spec);

/// Only Identity is linear among the shipped families.
bool is_linear(const UtilitySpec& spec);

/// The parameter a grid sweeps: harm for Mining, alpha, gamma, target.
/// Identity has none and reports 0.
double varying_parameter(const UtilitySpec& spec);
UtilitySpec with_parameter(const UtilitySpec& base, double value);

double eval_scalar_utility(const UtilitySpec& spec, double total_return);

/// Lower-quantile VaR: min { z : P(Z <= z) >= alpha }.
double value_at_risk(const ReturnDistribution& dist, double alpha);
/// E[Z | Z <= VaR_alpha(Z)].
double conditional_value_at_risk(const ReturnDistribution& dist, double alpha);
double eval_cvar(const UtilitySpec& spec, const ReturnDistribution& dist);

double eval_discount_utility(const UtilitySpec& spec, std::span<const double> rewards);

struct ParameterGrid {
    UtilitySpec base;
    std::vector<double> values;

    UtilityFamily family() const { return family_of(base); }
    std::size_t size() const { return values.size(); }
    UtilitySpec point(std::size_t i) const { return with_parameter(base, values.at(i)); }
    double lo() const { return values.front(); }
    double hi() const { return values.back(); }

    friend bool operator==(const ParameterGrid&, const ParameterGrid&) = default;
};

/// Evenly spaced inclusive grid; points are snapped to 12 significant
/// digits so they read back as clean decimals.
ParameterGrid make_grid(UtilityFamily family, double lo, double hi, int count);
ParameterGrid make_grid(const UtilitySpec& base, double lo, double hi, int count);

nlohmann::json to_json(const UtilitySpec& spec);
UtilitySpec utility_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ParameterGrid& grid);
ParameterGrid grid_from_json(const nlohmann::json& j);

} // namespace ubrl
