#include "ubrl/utility.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <cmath>
#include <cstdio>

namespace ubrl {

namespace {

// Cumulative probabilities are sums of parsed decimals, so F(z) >= alpha is
// tested with this much slack.
constexpr double kQuantileSlack = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double snap12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return parse_decimal(buf);
}

} // namespace

UtilityFamily family_of(const UtilitySpec& spec) {
    return std::visit(overloaded{
                          [](const utility::Identity&) { return UtilityFamily::Identity; },
                          [](const utility::Mining&) { return UtilityFamily::Mining; },
                          [](const utility::Cvar&) { return UtilityFamily::Cvar; },
                          [](const utility::Discount&) { return UtilityFamily::Discount; },
                          [](const utility::Satisficing&) { return UtilityFamily::Satisficing; },
                      },
                      spec);
}

UtilityInput applies_to(UtilityFamily family) {
    switch (family) {
    case UtilityFamily::Cvar: return UtilityInput::Distribution;
    case UtilityFamily::Discount: return UtilityInput::RewardSequence;
    default: return UtilityInput::ScalarReturn;
    }
}

std::string_view family_name(UtilityFamily family) {
    switch (family) {
    case UtilityFamily::Identity: return "identity";
    case UtilityFamily::Mining: return "mining";
    case UtilityFamily::Cvar: return "cvar";
    case UtilityFamily::Discount: return "discount";
    case UtilityFamily::Satisficing: return "satisficing";
    }
    return "unknown";
}

UtilityFamily parse_family(std::string_view name) {
    for (auto f : {UtilityFamily::Identity, UtilityFamily::Mining, UtilityFamily::Cvar, UtilityFamily::Discount,
                   UtilityFamily::Satisficing})
        if (family_name(f) == name)
            return f;
    fail(ErrorKind::ParseError, "unknown utility family '" + std::string(name) + "'");
}

UtilitySpec default_spec(UtilityFamily family) {
    switch (family) {
    case UtilityFamily::Identity: return utility::Identity{};
    case UtilityFamily::Mining: return utility::Mining{};
    case UtilityFamily::Cvar: return utility::Cvar{};
    case UtilityFamily::Discount: return utility::Discount{};
    case UtilityFamily::Satisficing: return utility::Satisficing{};
    }
    return utility::Identity{};
}

void validate_spec(const UtilitySpec& spec) {
    std::visit(overloaded{
                   [](const utility::Identity&) {},
                   [](const utility::Mining& m) {
                       if (!(m.price >= 0.0) || !(m.penalty >= 0.0) || !(m.harm >= 0.0) || !(m.contract_qty >= 0.0) ||
                           !std::isfinite(m.price + m.penalty + m.harm + m.contract_qty))
                           fail(ErrorKind::InvalidParams, "mining parameters must be finite and non-negative");
                   },
                   [](const utility::Cvar& c) {
                       if (!(c.alpha > 0.0 && c.alpha <= 1.0))
                           fail(ErrorKind::InvalidAlpha, "alpha " + format_decimal(c.alpha) + " outside (0,1]");
                   },
                   [](const utility::Discount& d) {
                       if (!(d.gamma >= 0.0 && d.gamma <= 1.0))
                           fail(ErrorKind::InvalidParams, "gamma " + format_decimal(d.gamma) + " outside [0,1]");
                   },
                   [](const utility::Satisficing& s) {
                       if (!std::isfinite(s.target))
                           fail(ErrorKind::InvalidParams, "satisficing target must be finite");
                   },
               },
               spec);
}

bool is_linear(const UtilitySpec& spec) { return family_of(spec) == UtilityFamily::Identity; }

double varying_parameter(const UtilitySpec& spec) {
    return std::visit(overloaded{
                          [](const utility::Identity&) { return 0.0; },
                          [](const utility::Mining& m) { return m.harm; },
                          [](const utility::Cvar& c) { return c.alpha; },
                          [](const utility::Discount& d) { return d.gamma; },
                          [](const utility::Satisficing& s) { return s.target; },
                      },
                      spec);
}

UtilitySpec with_parameter(const UtilitySpec& base, double value) {
    return std::visit(overloaded{
                          [](utility::Identity i) -> UtilitySpec { return i; },
                          [&](utility::Mining m) -> UtilitySpec {
                              m.harm = value;
                              return m;
                          },
                          [&](utility::Cvar c) -> UtilitySpec {
                              c.alpha = value;
                              return c;
                          },
                          [&](utility::Discount d) -> UtilitySpec {
                              d.gamma = value;
                              return d;
                          },
                          [&](utility::Satisficing s) -> UtilitySpec {
                              s.target = value;
                              return s;
                          },
                      },
                      base);
}

double eval_scalar_utility(const UtilitySpec& spec, double x) {
    validate_spec(spec);
    return std::visit(overloaded{
                          [&](const utility::Identity&) { return x; },
                          [&](const utility::Mining& m) {
                              const double breach = x < m.contract_qty ? 1.0 : 0.0;
                              return m.price * x - breach * (m.penalty + m.harm);
                          },
                          [&](const utility::Satisficing& s) { return -std::abs(s.target - x); },
                          [&](const auto&) -> double {
                              fail(ErrorKind::WrongFamily, std::string(family_name(family_of(spec))) +
                                                               " utility does not apply to a scalar return");
                          },
                      },
                      spec);
}

double value_at_risk(const ReturnDistribution& dist, double alpha) {
    if (dist.empty())
        fail(ErrorKind::EmptyDistribution, "VaR of an empty distribution");
    if (!(alpha > 0.0 && alpha <= 1.0))
        fail(ErrorKind::InvalidAlpha, "alpha " + format_decimal(alpha) + " outside (0,1]");
    double cumulative = 0.0;
    for (const Atom& a : dist.atoms()) {
        cumulative += a.prob;
        if (cumulative >= alpha - kQuantileSlack)
            return a.value;
    }
    return dist.atoms().back().value;
}

double conditional_value_at_risk(const ReturnDistribution& dist, double alpha) {
    const double var = value_at_risk(dist, alpha);
    double mass = 0.0;
    double weighted = 0.0;
    for (const Atom& a : dist.atoms()) {
        if (a.value > var)
            break;
        mass += a.prob;
        weighted += a.prob * a.value;
    }
    return weighted / mass;
}

double eval_cvar(const UtilitySpec& spec, const ReturnDistribution& dist) {
    const auto* c = std::get_if<utility::Cvar>(&spec);
    if (c == nullptr)
        fail(ErrorKind::WrongFamily, std::string(family_name(family_of(spec))) + " utility is not CVaR");
    return conditional_value_at_risk(dist, c->alpha);
}

double eval_discount_utility(const UtilitySpec& spec, std::span<const double> rewards) {
    const auto* d = std::get_if<utility::Discount>(&spec);
    if (d == nullptr)
        fail(ErrorKind::WrongFamily, std::string(family_name(family_of(spec))) + " utility is not a discount utility");
    validate_spec(spec);
    double total = 0.0;
    double pow = 1.0;
    for (double r : rewards) {
        total += pow * r;
        pow *= d->gamma;
    }
    return total;
}

ParameterGrid make_grid(UtilityFamily family, double lo, double hi, int count) {
    return make_grid(default_spec(family), lo, hi, count);
}

ParameterGrid make_grid(const UtilitySpec& base, double lo, double hi, int count) {
    if (count < 1)
        fail(ErrorKind::InvalidRange, "grid needs at least one point");
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
        fail(ErrorKind::InvalidRange, "grid needs lo <= hi");
    if (count > 1 && lo == hi)
        fail(ErrorKind::InvalidRange, "grid points must be strictly increasing");
    if (family_of(base) == UtilityFamily::Identity && count != 1)
        fail(ErrorKind::InvalidRange, "identity utility has no parameter to sweep");
    for (double endpoint : {lo, hi}) {
        try {
            validate_spec(with_parameter(base, endpoint));
        } catch (const Error& e) {
            fail(ErrorKind::InvalidRange, std::string("grid endpoint invalid: ") + e.what());
        }
    }

    ParameterGrid grid{base, {}};
    grid.values.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        grid.values.push_back(lo);
    } else {
        const double n = count - 1;
        for (int i = 0; i < count; ++i)
            grid.values.push_back(i == 0 ? lo : i == count - 1 ? hi : snap12(((n - i) * lo + i * hi) / n));
    }
    grid.base = with_parameter(base, grid.values.front());
    return grid;
}

nlohmann::json to_json(const UtilitySpec& spec) {
    nlohmann::json params = nlohmann::json::object();
    std::visit(overloaded{
                   [](const utility::Identity&) {},
                   [&](const utility::Mining& m) {
                       params["price"] = format_decimal(m.price);
                       params["penalty"] = format_decimal(m.penalty);
                       params["harm"] = format_decimal(m.harm);
                       params["contract_qty"] = format_decimal(m.contract_qty);
                   },
                   [&](const utility::Cvar& c) { params["alpha"] = format_decimal(c.alpha); },
                   [&](const utility::Discount& d) { params["gamma"] = format_decimal(d.gamma); },
                   [&](const utility::Satisficing& s) { params["target"] = format_decimal(s.target); },
               },
               spec);
    return {{"family", std::string(family_name(family_of(spec)))}, {"params", std::move(params)}};
}

UtilitySpec utility_from_json(const nlohmann::json& j) {
    try {
        const auto family = parse_family(j.at("family").get<std::string>());
        UtilitySpec spec = default_spec(family);
        const nlohmann::json params = j.value("params", nlohmann::json::object());
        auto read = [&](const char* key, double& field) {
            if (params.contains(key))
                field = json_decimal(params.at(key));
        };
        std::visit(overloaded{
                       [](utility::Identity&) {},
                       [&](utility::Mining& m) {
                           read("price", m.price);
                           read("penalty", m.penalty);
                           read("harm", m.harm);
                           read("contract_qty", m.contract_qty);
                       },
                       [&](utility::Cvar& c) { read("alpha", c.alpha); },
                       [&](utility::Discount& d) { read("gamma", d.gamma); },
                       [&](utility::Satisficing& s) { read("target", s.target); },
                   },
                   spec);
        validate_spec(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed utility JSON: ") + e.what());
    }
}

nlohmann::json to_json(const ParameterGrid& grid) {
    auto points = nlohmann::json::array();
    for (double v : grid.values)
        points.push_back(format_decimal(v));
    nlohmann::json base = to_json(grid.base);
    return {{"family", base["family"]},
            {"lo", format_decimal(grid.lo())},
            {"hi", format_decimal(grid.hi())},
            {"count", grid.size()},
            {"base", base["params"]},
            {"points", std::move(points)}};
}

ParameterGrid grid_from_json(const nlohmann::json& j) {
    try {
        nlohmann::json spec_json = {{"family", j.at("family")}, {"params", j.value("base", nlohmann::json::object())}};
        const UtilityFamily family = parse_family(j.at("family").get<std::string>());
        if (family != UtilityFamily::Identity && spec_json["params"].empty())
            spec_json["params"] = to_json(default_spec(family))["params"];
        // The base may carry the swept parameter at any in-range value.
        UtilitySpec base = utility_from_json(spec_json);
        if (j.contains("points")) {
            ParameterGrid grid{base, {}};
            for (const auto& p : j.at("points"))
                grid.values.push_back(json_decimal(p));
            if (grid.values.empty())
                fail(ErrorKind::InvalidRange, "grid has no points");
            for (std::size_t i = 0; i < grid.values.size(); ++i) {
                if (i > 0 && !(grid.values[i] > grid.values[i - 1]))
                    fail(ErrorKind::InvalidRange, "grid points must be strictly increasing");
                validate_spec(grid.point(i));
            }
            grid.base = grid.point(0);
            return grid;
        }
        return make_grid(base, json_decimal(j.at("lo")), json_decimal(j.at("hi")), j.at("count").get<int>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed grid JSON: ") + e.what());
    }
}

} // namespace ubrl
