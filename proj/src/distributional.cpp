#include "ubrl/distributional.hpp"

#include "ubrl/error.hpp"
#include "ubrl/random.hpp"
#include "ubrl/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ubrl {

std::pair<double, double> return_bounds(const Mdp& mdp) {
    require_valid(mdp);
    require_scalar(mdp);
    const auto n = static_cast<std::size_t>(mdp.num_states);
    std::vector<double> lo_next(n, 0.0), hi_next(n, 0.0);
    double lo = 0.0, hi = 0.0;
    for (int t = mdp.horizon - 1; t >= 0; --t) {
        std::vector<double> lo_now(n, 0.0), hi_now(n, 0.0);
        for (int s = 0; s < mdp.num_states; ++s) {
            if (mdp.is_terminal(s))
                continue;
            double l = std::numeric_limits<double>::infinity();
            double h = -l;
            for (int a = 0; a < mdp.num_actions; ++a)
                for (const auto& o : mdp.outcomes(s, a)) {
                    if (o.prob <= 0.0)
                        continue;
                    const auto next = static_cast<std::size_t>(o.next_state);
                    l = std::min(l, o.reward.front() + mdp.gamma * lo_next[next]);
                    h = std::max(h, o.reward.front() + mdp.gamma * hi_next[next]);
                }
            lo_now[static_cast<std::size_t>(s)] = l;
            hi_now[static_cast<std::size_t>(s)] = h;
            lo = std::min(lo, l);
            hi = std::max(hi, h);
        }
        lo_next = std::move(lo_now);
        hi_next = std::move(hi_now);
    }
    return {lo, hi};
}

namespace {

std::vector<double> make_atoms(double lo, double hi, std::size_t count) {
    std::vector<double> atoms(count);
    for (std::size_t i = 0; i < count; ++i)
        atoms[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return atoms;
}

void check_in_support(const std::vector<double>& atoms, double value) {
    const double b = (value - atoms.front()) / (atoms[1] - atoms[0]);
    if (b < -1e-7 || b > static_cast<double>(atoms.size() - 1) + 1e-7)
        fail(ErrorKind::SupportTooNarrow, "return " + std::to_string(value) + " outside the support [" +
                                              std::to_string(atoms.front()) + ", " + std::to_string(atoms.back()) + "]");
}

// Splits mass between the two atoms around value, clamping to the ends.
void project_into(const std::vector<double>& atoms, double value, double mass, std::vector<double>& out) {
    const double last = static_cast<double>(atoms.size() - 1);
    const double b = std::clamp((value - atoms.front()) / (atoms[1] - atoms[0]), 0.0, last);
    const double nearest = std::round(b);
    if (std::abs(b - nearest) < 1e-9) {
        out[static_cast<std::size_t>(nearest)] += mass;
        return;
    }
    const auto l = static_cast<std::size_t>(std::floor(b));
    const double frac = b - static_cast<double>(l);
    out[l] += mass * (1.0 - frac);
    out[l + 1] += mass * frac;
}

} // namespace

std::vector<double> project_categorical(const std::vector<double>& atoms, const std::vector<double>& probs,
                                        double shift, double scale) {
    if (atoms.size() < 2 || probs.size() != atoms.size())
        fail(ErrorKind::ConfigError, "categorical support needs at least two atoms");
    std::vector<double> out(atoms.size(), 0.0);
    for (std::size_t j = 0; j < atoms.size(); ++j)
        if (probs[j] > 0.0) {
            check_in_support(atoms, shift + scale * atoms[j]);
            project_into(atoms, shift + scale * atoms[j], probs[j], out);
        }
    return out;
}

namespace {

// Bootstrapped target r + gamma * Z(next). Interpolation can leave mass up to
// a bin beyond a state's true extremes, so the shifted atoms are clamped
// rather than checked; sampled returns are checked separately.
std::vector<double> bootstrap_target(const std::vector<double>& atoms, const std::vector<double>& probs, double reward,
                                     double gamma) {
    std::vector<double> out(atoms.size(), 0.0);
    for (std::size_t j = 0; j < atoms.size(); ++j)
        if (probs[j] > 0.0)
            project_into(atoms, reward + gamma * atoms[j], probs[j], out);
    return out;
}

} // namespace

ReturnDistribution CategoricalEstimate::initial_distribution(const Mdp& mdp) const {
    std::vector<Atom> mixed;
    for (int s = 0; s < mdp.num_states; ++s) {
        const double mu = mdp.initial_dist[static_cast<std::size_t>(s)];
        if (mu <= 0.0)
            continue;
        if (mdp.is_terminal(s)) {
            mixed.push_back({0.0, mu});
            continue;
        }
        auto it = probs.find(DecisionKey{0, s, 0.0});
        if (it == probs.end())
            fail(ErrorKind::EmptyDistribution, "no estimate for start state " + std::to_string(s));
        for (std::size_t j = 0; j < atoms.size(); ++j)
            mixed.push_back({atoms[j], mu * it->second[j]});
    }
    // Renormalise away the rounding drift of many small mixing steps.
    double total = 0.0;
    for (const auto& a : mixed)
        total += a.prob;
    for (auto& a : mixed)
        a.prob /= total;
    return ReturnDistribution::from_atoms(std::move(mixed));
}

CategoricalEstimate evaluate_distribution_td(const Mdp& mdp, const Policy& policy, const DistributionalConfig& config) {
    require_valid(mdp);
    require_scalar(mdp);
    if (config.num_atoms < 2)
        fail(ErrorKind::ConfigError, "need at least two atoms");
    if (config.max_episodes == 0 || config.sweep_episodes == 0)
        fail(ErrorKind::ConfigError, "episode budget must be positive");

    auto [lo, hi] = return_bounds(mdp);
    lo = config.v_min.value_or(lo);
    hi = config.v_max.value_or(hi);
    if (!(hi > lo)) {
        if (config.v_min || config.v_max)
            fail(ErrorKind::ConfigError, "need v_min < v_max");
        hi = lo + 1.0;
    }

    CategoricalEstimate est;
    est.atoms = make_atoms(lo, hi, config.num_atoms);
    std::map<DecisionKey, std::size_t> visits;
    const bool track_acc = policy.augmentation() == Augmentation::AccReturn;
    const auto powers = discount_powers(mdp.gamma, mdp.horizon);
    Rng rng(config.seed);

    struct Transition {
        DecisionKey key;
        double reward;
        bool end;
        DecisionKey next;
    };
    std::vector<Transition> episode;
    auto snapshot = est.probs;

    for (std::size_t e = 0; e < config.max_episodes; ++e) {
        episode.clear();
        AugmentedState st{sample_initial_state(mdp, rng), 0.0, 0};
        auto estimate_key = [&](const AugmentedState& s) {
            return DecisionKey{s.timestep, s.env_state, track_acc ? policy.key(s).acc : 0.0};
        };
        while (st.timestep < mdp.horizon && !mdp.is_terminal(st.env_state)) {
            const int a = policy.require_action(st);
            const Outcome& o = sample_outcome(mdp, st.env_state, a, rng);
            const AugmentedState st2 =
                policy.advance(st, o.next_state, powers[static_cast<std::size_t>(st.timestep)], o.reward.front());
            const bool end = st2.timestep >= mdp.horizon || mdp.is_terminal(st2.env_state);
            episode.push_back({estimate_key(st), o.reward.front(), end, estimate_key(st2)});
            st = st2;
        }
        double sampled = 0.0;
        for (auto it = episode.rbegin(); it != episode.rend(); ++it) {
            sampled = it->reward + (it->end ? 0.0 : mdp.gamma * sampled);
            check_in_support(est.atoms, sampled);
            std::vector<double> target;
            if (it->end) {
                target.assign(est.atoms.size(), 0.0);
                project_into(est.atoms, it->reward, 1.0, target);
            } else {
                target = bootstrap_target(est.atoms, est.probs.at(it->next), it->reward, mdp.gamma);
            }
            auto& p = est.probs[it->key];
            if (p.empty())
                p.assign(est.atoms.size(), 0.0);
            const double beta = 1.0 / static_cast<double>(++visits[it->key]);
            double mass = 0.0;
            for (std::size_t j = 0; j < p.size(); ++j) {
                p[j] += beta * (target[j] - p[j]);
                mass += p[j];
            }
            est.max_mass_error = std::max(est.max_mass_error, std::abs(mass - 1.0));
        }
        est.episodes = e + 1;

        if (est.episodes % config.sweep_episodes == 0) {
            double change = snapshot.empty() ? 1.0 : 0.0;
            for (const auto& [key, p] : est.probs) {
                auto old = snapshot.find(key);
                if (old == snapshot.end()) {
                    change = 1.0;
                    break;
                }
                double tv = 0.0;
                for (std::size_t j = 0; j < p.size(); ++j)
                    tv += std::abs(p[j] - old->second[j]);
                change = std::max(change, 0.5 * tv);
            }
            if (change < config.tolerance) {
                est.converged = true;
                break;
            }
            snapshot = est.probs;
        }
    }
    return est;
}

CoverageSet cvar_policy_sweep(const Mdp& mdp, const ParameterGrid& alpha_grid, SweepMode mode,
                              const DistributionalConfig& config, const EnumerationLimits& limits) {
    if (alpha_grid.family() != UtilityFamily::Cvar)
        fail(ErrorKind::WrongFamily, "the CVaR sweep needs a cvar utility grid");
    require_valid(mdp);
    require_scalar(mdp);

    CoverageSet set;
    set.criterion = Criterion::CVaR;
    set.solver = mode == SweepMode::ExactEnum ? "exact-enum" : "dist-td";
    set.grid = alpha_grid;

    if (mode == SweepMode::ExactEnum) {
        for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
            const auto spec = alpha_grid.point(k);
            auto res = enumerate_policies(mdp, spec, Criterion::CVaR, limits, false);
            set.entries.push_back(make_entry(mdp, alpha_grid.values[k], res.best, spec, Criterion::CVaR, limits));
        }
    } else {
        struct Candidate {
            Policy policy;
            ReturnDistribution estimate;
        };
        std::vector<Candidate> candidates;
        for_each_policy(mdp, Augmentation::None, limits.max_policies, [&](const Policy& p) {
            candidates.push_back({p, evaluate_distribution_td(mdp, p, config).initial_distribution(mdp)});
        });
        for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
            const auto spec = alpha_grid.point(k);
            const Candidate* best = nullptr;
            double best_value = 0.0;
            for (const auto& c : candidates) {
                const double v = eval_cvar(spec, c.estimate);
                const double tol = 1e-9 * std::max(1.0, std::abs(best_value));
                if (!best || v > best_value + tol ||
                    (std::abs(v - best_value) <= tol && action_map_less(c.policy, best->policy))) {
                    if (!best || v > best_value)
                        best_value = v;
                    best = &c;
                }
            }
            set.entries.push_back(make_entry(mdp, alpha_grid.values[k], best->policy, spec, Criterion::CVaR, limits));
        }
    }
    for (auto& e : set.entries)
        e.policy.metadata.solver = set.solver;
    mark_duplicates(set);
    return set;
}

} // namespace ubrl
