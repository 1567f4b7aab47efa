#pragma once

// Test-side reference computations. They deliberately avoid the library's
// solvers: forward mass propagation instead of path enumeration, plain
// backward recursion instead of value_iteration, expectimax over full
// histories instead of augmented DP.

#include "ubrl/mdp.hpp"
#include "ubrl/policy.hpp"
#include "ubrl/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using Dist = std::vector<std::pair<double, double>>; // (value, prob), sorted by value

inline Dist merged(std::vector<std::pair<double, double>> atoms) {
    std::sort(atoms.begin(), atoms.end());
    Dist out;
    for (const auto& [v, p] : atoms) {
        if (p <= 0.0)
            continue;
        if (!out.empty() && std::abs(out.back().first - v) < 1e-9)
            out.back().second += p;
        else
            out.push_back({v, p});
    }
    return out;
}

/// Return distribution of a policy by propagating probability mass layer by
/// layer. `eval_gamma` discounts the evaluated return; the policy's own
/// accumulator always uses the MDP's gamma.
inline Dist forward_distribution(const ubrl::Mdp& mdp, const ubrl::Policy& policy, double eval_gamma) {
    // (state, policy acc, evaluated return) -> mass
    std::map<std::tuple<int, double, double>, double> layer;
    for (int s = 0; s < mdp.num_states; ++s)
        if (mdp.initial_dist[s] > 0.0)
            layer[{s, 0.0, 0.0}] += mdp.initial_dist[s];
    std::vector<std::pair<double, double>> finished;
    double mdp_pow = 1.0;
    double eval_pow = 1.0;
    for (int t = 0; t < mdp.horizon; ++t) {
        std::map<std::tuple<int, double, double>, double> next;
        for (const auto& [key, mass] : layer) {
            const auto [s, acc, ret] = key;
            if (mdp.is_terminal(s)) {
                finished.push_back({ret, mass});
                continue;
            }
            const ubrl::AugmentedState st{s, acc, t};
            const int a = policy.require_action(st);
            for (const auto& o : mdp.outcomes(s, a)) {
                const double acc2 = policy.advance(st, o.next_state, mdp_pow, o.reward[0]).acc_return;
                next[{o.next_state, acc2, ret + eval_pow * o.reward[0]}] += mass * o.prob;
            }
        }
        layer = std::move(next);
        mdp_pow *= mdp.gamma;
        eval_pow *= eval_gamma;
    }
    for (const auto& [key, mass] : layer)
        finished.push_back({std::get<2>(key), mass});
    return merged(std::move(finished));
}

inline Dist forward_distribution(const ubrl::Mdp& mdp, const ubrl::Policy& policy) {
    return forward_distribution(mdp, policy, mdp.gamma);
}

inline double mean(const Dist& d) {
    double m = 0.0;
    for (const auto& [v, p] : d)
        m += v * p;
    return m;
}

inline double expected_utility(const Dist& d, const std::function<double(double)>& u) {
    double m = 0.0;
    for (const auto& [v, p] : d)
        m += u(v) * p;
    return m;
}

/// Lower-tail conditional expectation below the alpha-quantile.
inline double cvar(const Dist& d, double alpha) {
    double cum = 0.0;
    double var = d.back().first;
    for (const auto& [v, p] : d) {
        cum += p;
        if (cum >= alpha - 1e-12) {
            var = v;
            break;
        }
    }
    double num = 0.0, den = 0.0;
    for (const auto& [v, p] : d)
        if (v <= var) {
            num += v * p;
            den += p;
        }
    return num / den;
}

/// Optimal expected discounted return by backward recursion.
inline double optimal_value(const ubrl::Mdp& mdp, double gamma) {
    std::vector<double> v(mdp.num_states, 0.0);
    for (int t = mdp.horizon - 1; t >= 0; --t) {
        std::vector<double> w(mdp.num_states, 0.0);
        for (int s = 0; s < mdp.num_states; ++s) {
            if (mdp.is_terminal(s))
                continue;
            double best = -1e300;
            for (int a = 0; a < mdp.num_actions; ++a) {
                double q = 0.0;
                for (const auto& o : mdp.outcomes(s, a))
                    q += o.prob * (o.reward[0] + gamma * v[o.next_state]);
                best = std::max(best, q);
            }
            w[s] = best;
        }
        v = std::move(w);
    }
    double total = 0.0;
    for (int s = 0; s < mdp.num_states; ++s)
        total += mdp.initial_dist[s] * v[s];
    return total;
}

/// max over history-dependent policies of E[u(return)], by expectimax over
/// the whole trajectory tree.
inline double optimal_esr(const ubrl::Mdp& mdp, const std::function<double(double)>& u) {
    std::function<double(int, int, double, double)> go = [&](int s, int t, double ret, double pow) {
        if (t >= mdp.horizon || mdp.is_terminal(s))
            return u(ret);
        double best = -1e300;
        for (int a = 0; a < mdp.num_actions; ++a) {
            double q = 0.0;
            for (const auto& o : mdp.outcomes(s, a))
                q += o.prob * go(o.next_state, t + 1, ret + pow * o.reward[0], pow * mdp.gamma);
            best = std::max(best, q);
        }
        return best;
    };
    double total = 0.0;
    for (int s = 0; s < mdp.num_states; ++s)
        if (mdp.initial_dist[s] > 0.0)
            total += mdp.initial_dist[s] * go(s, 0, 0.0, 1.0);
    return total;
}

/// Fraction of `trials` Bernoulli(p) outcomes must lie within 3 sigma.
inline bool within_three_sigma(std::size_t hits, std::size_t trials, double p) {
    const double n = static_cast<double>(trials);
    const double sigma = std::sqrt(n * p * (1.0 - p));
    return std::abs(static_cast<double>(hits) - n * p) <= 3.0 * sigma;
}

} // namespace oracle

namespace oracle {

using HistoryKey = std::tuple<int, int, double>; // (t, s, accumulated return)

/// ESR-optimal decisions by expectimax over histories, ties to the lowest
/// action index, recorded for the histories the chosen policy reaches.
inline std::map<HistoryKey, int> optimal_esr_policy(const ubrl::Mdp& mdp, const std::function<double(double)>& u) {
    std::function<double(int, int, double, double)> value = [&](int s, int t, double ret, double pow) {
        if (t >= mdp.horizon || mdp.is_terminal(s))
            return u(ret);
        double best = -1e300;
        for (int a = 0; a < mdp.num_actions; ++a) {
            double q = 0.0;
            for (const auto& o : mdp.outcomes(s, a))
                q += o.prob * value(o.next_state, t + 1, ret + pow * o.reward[0], pow * mdp.gamma);
            best = std::max(best, q);
        }
        return best;
    };
    std::map<HistoryKey, int> chosen;
    std::function<void(int, int, double, double)> walk = [&](int s, int t, double ret, double pow) {
        if (t >= mdp.horizon || mdp.is_terminal(s) || chosen.count({t, s, ret}))
            return;
        std::vector<double> q(mdp.num_actions, 0.0);
        for (int a = 0; a < mdp.num_actions; ++a)
            for (const auto& o : mdp.outcomes(s, a))
                q[a] += o.prob * value(o.next_state, t + 1, ret + pow * o.reward[0], pow * mdp.gamma);
        const double best = *std::max_element(q.begin(), q.end());
        int a = 0;
        while (q[a] < best - 1e-12 * std::max(1.0, std::abs(best)))
            ++a;
        chosen[{t, s, ret}] = a;
        for (const auto& o : mdp.outcomes(s, a))
            if (o.prob > 0.0)
                walk(o.next_state, t + 1, ret + pow * o.reward[0], pow * mdp.gamma);
    };
    for (int s = 0; s < mdp.num_states; ++s)
        if (mdp.initial_dist[s] > 0.0)
            walk(s, 0, 0.0, 1.0);
    return chosen;
}

inline std::map<HistoryKey, int> as_history_map(const ubrl::Policy& policy) {
    std::map<HistoryKey, int> out;
    for (const auto& [key, a] : policy.action_map())
        out[{key.timestep, key.state, key.acc}] = a;
    return out;
}

} // namespace oracle
