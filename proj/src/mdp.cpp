#include "ubrl/mdp.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace ubrl {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string short_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string row_name(std::size_t s, std::size_t a) {
    return "(" + std::to_string(s) + "," + std::to_string(a) + ")";
}

} // namespace

bool Mdp::is_terminal(int state) const {
    return std::find(terminal_states.begin(), terminal_states.end(), state) != terminal_states.end();
}

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    auto complain = [&](std::string msg) { report.push_back(std::move(msg)); };

    if (mdp.num_states < 1)
        complain("num_states must be positive");
    if (mdp.num_actions < 1)
        complain("num_actions must be positive");
    if (mdp.reward_dim < 1)
        complain("reward_dim must be positive");
    if (mdp.horizon < 1)
        complain("horizon must be at least 1");
    if (!(mdp.gamma >= 0.0 && mdp.gamma <= 1.0))
        complain("gamma " + short_number(mdp.gamma) + " outside [0,1]");
    if (!report.empty())
        return report;

    const auto ns = static_cast<std::size_t>(mdp.num_states);
    const auto na = static_cast<std::size_t>(mdp.num_actions);

    if (mdp.initial_dist.size() != ns) {
        complain("initial distribution has " + std::to_string(mdp.initial_dist.size()) +
                 " entries, expected " + std::to_string(ns));
    } else {
        double sum = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            const double p = mdp.initial_dist[s];
            if (!(p >= 0.0 && p <= 1.0))
                complain("initial distribution entry " + std::to_string(s) + " outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            complain("initial distribution sums to " + short_number(sum));
    }

    std::set<int> seen_terminals;
    for (int t : mdp.terminal_states) {
        if (t < 0 || t >= mdp.num_states)
            complain("terminal state " + std::to_string(t) + " out of range");
        else if (!seen_terminals.insert(t).second)
            complain("terminal state " + std::to_string(t) + " listed twice");
    }

    if (mdp.transitions.size() != ns) {
        complain("transition table has " + std::to_string(mdp.transitions.size()) +
                 " states, expected " + std::to_string(ns));
        return report;
    }
    for (std::size_t s = 0; s < ns; ++s) {
        if (mdp.transitions[s].size() != na) {
            complain("state " + std::to_string(s) + " has " + std::to_string(mdp.transitions[s].size()) +
                     " actions, expected " + std::to_string(na));
            continue;
        }
        const bool terminal = seen_terminals.count(static_cast<int>(s)) > 0;
        for (std::size_t a = 0; a < na; ++a) {
            const auto& row = mdp.transitions[s][a];
            double sum = 0.0;
            for (const Outcome& o : row) {
                if (o.next_state < 0 || o.next_state >= mdp.num_states)
                    complain("transition row " + row_name(s, a) + " targets state " +
                             std::to_string(o.next_state) + " out of range");
                if (!(o.prob >= 0.0 && o.prob <= 1.0))
                    complain("transition row " + row_name(s, a) + " has probability " +
                             short_number(o.prob) + " outside [0,1]");
                if (o.reward.size() != static_cast<std::size_t>(mdp.reward_dim))
                    complain("transition row " + row_name(s, a) + " has reward of dimension " +
                             std::to_string(o.reward.size()) + ", expected " +
                             std::to_string(mdp.reward_dim));
                sum += o.prob;
            }
            if (std::abs(sum - 1.0) > kSumTolerance)
                complain("transition row " + row_name(s, a) + " sums to " + short_number(sum));
            if (terminal) {
                const bool self_loop = std::all_of(row.begin(), row.end(), [&](const Outcome& o) {
                    return o.prob == 0.0 ||
                           (o.next_state == static_cast<int>(s) &&
                            std::all_of(o.reward.begin(), o.reward.end(), [](double r) { return r == 0.0; }));
                });
                if (!self_loop)
                    complain("terminal state " + std::to_string(s) + " row " + row_name(s, a) +
                             " is not a zero-reward self loop");
            }
        }
    }
    return report;
}

void require_valid(const Mdp& mdp) {
    const auto report = validate_mdp(mdp);
    if (report.empty())
        return;
    std::string msg = "invalid MDP:";
    for (std::size_t i = 0; i < report.size() && i < 5; ++i)
        msg += " " + report[i] + ";";
    fail(ErrorKind::InvalidMdp, msg);
}

void require_scalar(const Mdp& mdp) {
    if (mdp.reward_dim != 1)
        fail(ErrorKind::InvalidParams,
             "operation needs scalar (d = 1) rewards, got d = " + std::to_string(mdp.reward_dim));
}

Mdp embed_scalar_as_momdp(const ScalarMdp& in) {
    Mdp out;
    out.num_states = in.num_states;
    out.num_actions = in.num_actions;
    out.reward_dim = 1;
    out.gamma = in.gamma;
    out.horizon = in.horizon;
    out.initial_dist = in.initial_dist;
    out.terminal_states = in.terminal_states;
    out.transitions.resize(in.transitions.size());
    for (std::size_t s = 0; s < in.transitions.size(); ++s) {
        out.transitions[s].resize(in.transitions[s].size());
        for (std::size_t a = 0; a < in.transitions[s].size(); ++a)
            for (const ScalarOutcome& o : in.transitions[s][a])
                out.transitions[s][a].push_back({o.next_state, o.prob, {o.reward}});
    }
    return out;
}

Mdp embed_scalar_as_momdp(const Mdp& mdp) {
    require_scalar(mdp);
    return mdp;
}

std::vector<double> discount_powers(double gamma, int n) {
    std::vector<double> powers;
    powers.reserve(static_cast<std::size_t>(std::max(n, 0)));
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
        powers.push_back(p);
        p *= gamma;
    }
    return powers;
}

double accumulate_return(double acc, double discount_pow, double reward, double bin_width) {
    double next = acc + discount_pow * reward;
    if (bin_width > 0.0)
        next = bin_width * std::round(next / bin_width);
    return next == 0.0 ? 0.0 : next;
}

RewardVector discounted_return(const Trajectory& traj, double gamma) {
    if (traj.steps.empty())
        return {};
    RewardVector total(traj.steps.front().reward.size(), 0.0);
    const auto powers = discount_powers(gamma, static_cast<int>(traj.steps.size()));
    for (std::size_t i = 0; i < traj.steps.size(); ++i)
        for (std::size_t k = 0; k < total.size(); ++k)
            total[k] = accumulate_return(total[k], powers[i], traj.steps[i].reward[k]);
    return total;
}

std::vector<double> scalar_rewards(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.steps.size());
    for (const Step& step : traj.steps) {
        if (step.reward.size() != 1)
            fail(ErrorKind::InvalidParams, "trajectory rewards are not scalar");
        out.push_back(step.reward.front());
    }
    return out;
}

namespace {

nlohmann::json decimal_array(const std::vector<double>& xs) {
    auto arr = nlohmann::json::array();
    for (double x : xs)
        arr.push_back(format_decimal(x));
    return arr;
}

} // namespace

nlohmann::json to_json(const Mdp& mdp) {
    nlohmann::json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["reward_dim"] = mdp.reward_dim;
    j["gamma"] = format_decimal(mdp.gamma);
    j["horizon"] = mdp.horizon;
    j["initial_dist"] = decimal_array(mdp.initial_dist);
    j["terminal"] = mdp.terminal_states;
    auto rows = nlohmann::json::array();
    for (std::size_t s = 0; s < mdp.transitions.size(); ++s) {
        for (std::size_t a = 0; a < mdp.transitions[s].size(); ++a) {
            auto next = nlohmann::json::array();
            for (const Outcome& o : mdp.transitions[s][a])
                next.push_back({{"s2", o.next_state}, {"p", format_decimal(o.prob)}, {"r", decimal_array(o.reward)}});
            rows.push_back({{"s", s}, {"a", a}, {"next", std::move(next)}});
        }
    }
    j["transitions"] = std::move(rows);
    return j;
}

nlohmann::json to_json(const Trajectory& traj) {
    auto steps = nlohmann::json::array();
    for (const Step& st : traj.steps)
        steps.push_back({{"s", st.state}, {"a", st.action}, {"r", decimal_array(st.reward)}, {"s2", st.next_state}});
    return {{"steps", std::move(steps)}};
}

Mdp mdp_from_json(const nlohmann::json& j) {
    try {
        Mdp mdp;
        mdp.num_states = j.at("num_states").get<int>();
        mdp.num_actions = j.at("num_actions").get<int>();
        mdp.gamma = json_decimal(j.at("gamma"));
        mdp.horizon = j.at("horizon").get<int>();
        for (const auto& p : j.at("initial_dist"))
            mdp.initial_dist.push_back(json_decimal(p));
        if (j.contains("terminal"))
            mdp.terminal_states = j.at("terminal").get<std::vector<int>>();
        if (mdp.num_states < 1 || mdp.num_actions < 1)
            fail(ErrorKind::ParseError, "num_states and num_actions must be positive");

        int dim = j.contains("reward_dim") ? j.at("reward_dim").get<int>() : 0;
        mdp.transitions.assign(static_cast<std::size_t>(mdp.num_states),
                               std::vector<std::vector<Outcome>>(static_cast<std::size_t>(mdp.num_actions)));
        for (const auto& row : j.at("transitions")) {
            const int s = row.at("s").get<int>();
            const int a = row.at("a").get<int>();
            if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions)
                fail(ErrorKind::ParseError, "transition row (" + std::to_string(s) + "," + std::to_string(a) +
                                                ") out of range");
            auto& out = mdp.transitions[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
            for (const auto& n : row.at("next")) {
                Outcome o;
                o.next_state = n.at("s2").get<int>();
                o.prob = json_decimal(n.at("p"));
                const auto& r = n.at("r");
                if (r.is_array()) {
                    for (const auto& x : r)
                        o.reward.push_back(json_decimal(x));
                } else {
                    o.reward.push_back(json_decimal(r));
                }
                if (dim == 0)
                    dim = static_cast<int>(o.reward.size());
                out.push_back(std::move(o));
            }
        }
        mdp.reward_dim = dim == 0 ? 1 : dim;
        return mdp;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed MDP JSON: ") + e.what());
    }
}

} // namespace ubrl
