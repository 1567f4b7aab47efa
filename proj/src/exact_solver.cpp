#include "ubrl/exact_solver.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace ubrl {

namespace {

bool within_tie(double a, double best) { return a >= best - 1e-12 * std::max(1.0, std::abs(best)); }

/// Lowest index whose value ties the maximum.
int argmax_lowest(const std::vector<double>& q) {
    const double best = *std::max_element(q.begin(), q.end());
    for (std::size_t a = 0; a < q.size(); ++a)
        if (within_tie(q[a], best))
            return static_cast<int>(a);
    return 0;
}

class PathEnumerator {
public:
    PathEnumerator(const Mdp& mdp, const Policy& policy, double eval_gamma, std::size_t max_paths)
        : mdp_(mdp), policy_(policy), policy_pow_(discount_powers(mdp.gamma, mdp.horizon)),
          eval_pow_(discount_powers(eval_gamma, mdp.horizon)), max_paths_(max_paths) {}

    std::vector<Atom> run() {
        for (int s = 0; s < mdp_.num_states; ++s) {
            const double p = mdp_.initial_dist[static_cast<std::size_t>(s)];
            if (p > 0.0)
                walk(AugmentedState{s, 0.0, 0}, 0.0, p);
        }
        return std::move(leaves_);
    }

private:
    void walk(const AugmentedState& st, double ret, double prob) {
        if (st.timestep >= mdp_.horizon || mdp_.is_terminal(st.env_state)) {
            if (leaves_.size() >= max_paths_)
                fail(ErrorKind::ExplosionCap, "more than " + std::to_string(max_paths_) + " trajectories");
            leaves_.push_back({ret, prob});
            return;
        }
        const int a = policy_.require_action(st);
        const auto t = static_cast<std::size_t>(st.timestep);
        for (const Outcome& o : mdp_.outcomes(st.env_state, a)) {
            if (o.prob <= 0.0)
                continue;
            const double r = o.reward.front();
            walk(policy_.advance(st, o.next_state, policy_pow_[t], r), accumulate_return(ret, eval_pow_[t], r),
                 prob * o.prob);
        }
    }

    const Mdp& mdp_;
    const Policy& policy_;
    std::vector<double> policy_pow_;
    std::vector<double> eval_pow_;
    std::size_t max_paths_;
    std::vector<Atom> leaves_;
};

double eval_gamma_for(const Mdp& mdp, const UtilitySpec& spec) {
    if (const auto* d = std::get_if<utility::Discount>(&spec))
        return d->gamma;
    return mdp.gamma;
}

} // namespace

std::string_view criterion_name(Criterion c) {
    switch (c) {
    case Criterion::SER: return "ser";
    case Criterion::ESR: return "esr";
    case Criterion::CVaR: return "cvar";
    case Criterion::PerGamma: return "per-gamma";
    }
    return "ser";
}

Criterion parse_criterion(std::string_view name) {
    for (auto c : {Criterion::SER, Criterion::ESR, Criterion::CVaR, Criterion::PerGamma})
        if (criterion_name(c) == name)
            return c;
    fail(ErrorKind::ParseError, "unknown criterion '" + std::string(name) + "'");
}

ReturnDistribution enumerate_return_distribution(const Mdp& mdp, const Policy& policy, std::optional<double> gamma,
                                                 std::size_t max_paths) {
    require_scalar(mdp);
    PathEnumerator walker(mdp, policy, gamma.value_or(mdp.gamma), max_paths);
    return ReturnDistribution::from_atoms(walker.run());
}

double ser_value(const ReturnDistribution& dist, const ScalarUtility& u) { return u(dist.mean()); }

double esr_value(const ReturnDistribution& dist, const ScalarUtility& u) {
    double v = 0.0;
    for (const Atom& a : dist.atoms())
        v += a.prob * u(a.value);
    return v;
}

void check_criterion(const UtilitySpec& spec, Criterion criterion) {
    validate_spec(spec);
    const auto family = family_of(spec);
    bool ok = false;
    switch (criterion) {
    case Criterion::SER:
    case Criterion::ESR: ok = applies_to(family) == UtilityInput::ScalarReturn; break;
    case Criterion::CVaR: ok = family == UtilityFamily::Cvar; break;
    case Criterion::PerGamma: ok = family == UtilityFamily::Discount || family == UtilityFamily::Identity; break;
    }
    if (!ok)
        fail(ErrorKind::WrongFamily, std::string(family_name(family)) + " utility cannot be used with criterion " +
                                         std::string(criterion_name(criterion)));
}

EvaluationRecord evaluate(const Mdp& mdp, const Policy& policy, const UtilitySpec& spec, Criterion criterion,
                          const EnumerationLimits& limits) {
    check_criterion(spec, criterion);
    EvaluationRecord rec;
    rec.criterion = criterion;
    rec.utility = spec;
    auto dist = enumerate_return_distribution(mdp, policy, eval_gamma_for(mdp, spec), limits.max_paths);
    rec.expected_return = dist.mean();
    const auto u = [&](double x) { return eval_scalar_utility(spec, x); };
    switch (criterion) {
    case Criterion::SER: rec.value = ser_value(dist, u); break;
    case Criterion::ESR: rec.value = esr_value(dist, u); break;
    case Criterion::CVaR: rec.value = eval_cvar(spec, dist); break;
    case Criterion::PerGamma: rec.value = rec.expected_return; break;
    }
    rec.distribution = std::move(dist);
    return rec;
}

EvaluationRecord evaluate_ser(const Mdp& mdp, const Policy& policy, const UtilitySpec& spec,
                              const EnumerationLimits& limits) {
    return evaluate(mdp, policy, spec, Criterion::SER, limits);
}

EvaluationRecord evaluate_esr(const Mdp& mdp, const Policy& policy, const UtilitySpec& spec,
                              const EnumerationLimits& limits) {
    return evaluate(mdp, policy, spec, Criterion::ESR, limits);
}

ValueIterationResult value_iteration(const Mdp& mdp, std::optional<double> gamma_override) {
    require_valid(mdp);
    require_scalar(mdp);
    const double gamma = gamma_override.value_or(mdp.gamma);
    if (!(gamma >= 0.0 && gamma <= 1.0))
        fail(ErrorKind::InvalidParams, "discount " + format_decimal(gamma) + " outside [0,1]");

    const auto ns = static_cast<std::size_t>(mdp.num_states);
    const auto n = static_cast<std::size_t>(mdp.horizon);
    ValueIterationResult result;
    result.policy = Policy(Augmentation::Timestep);
    result.values.assign(n + 1, std::vector<double>(ns, 0.0));

    std::vector<double> q(static_cast<std::size_t>(mdp.num_actions));
    for (std::size_t t = n; t-- > 0;) {
        for (std::size_t s = 0; s < ns; ++s) {
            if (mdp.is_terminal(static_cast<int>(s)))
                continue;
            for (std::size_t a = 0; a < q.size(); ++a) {
                double v = 0.0;
                for (const Outcome& o : mdp.transitions[s][a])
                    v += o.prob * (o.reward.front() + gamma * result.values[t + 1][static_cast<std::size_t>(o.next_state)]);
                q[a] = v;
            }
            const int best = argmax_lowest(q);
            result.values[t][s] = q[static_cast<std::size_t>(best)];
            result.policy.set({static_cast<int>(t), static_cast<int>(s), 0.0}, best);
        }
    }
    for (std::size_t s = 0; s < ns; ++s)
        result.value += mdp.initial_dist[s] * result.values[0][s];
    result.policy.metadata.solver = "value-iteration";
    if (gamma_override)
        result.policy.metadata.utility = utility::Discount{gamma};
    return result;
}

AugmentedSolution augmented_value_iteration(const Mdp& mdp, const UtilitySpec& spec, double bin_width,
                                            const EnumerationLimits& limits) {
    require_valid(mdp);
    require_scalar(mdp);
    validate_spec(spec);
    if (applies_to(spec) != UtilityInput::ScalarReturn)
        fail(ErrorKind::WrongFamily, std::string(family_name(family_of(spec))) +
                                         " utility does not apply to a scalar return");
    if (!(bin_width >= 0.0))
        fail(ErrorKind::InvalidParams, "bin width must be non-negative");

    using Point = std::pair<int, double>; // (state, accumulated return)
    const auto powers = discount_powers(mdp.gamma, mdp.horizon);
    const auto n = static_cast<std::size_t>(mdp.horizon);

    // Forward sweep: every (state, acc) reachable at each timestep under any action.
    std::vector<std::set<Point>> layers(n + 1);
    for (int s = 0; s < mdp.num_states; ++s)
        if (mdp.initial_dist[static_cast<std::size_t>(s)] > 0.0)
            layers[0].insert({s, 0.0});
    std::size_t total = layers[0].size();
    for (std::size_t t = 0; t < n; ++t) {
        for (const auto& [s, acc] : layers[t]) {
            if (mdp.is_terminal(s))
                continue;
            for (int a = 0; a < mdp.num_actions; ++a)
                for (const Outcome& o : mdp.outcomes(s, a))
                    if (o.prob > 0.0 &&
                        layers[t + 1].insert({o.next_state, accumulate_return(acc, powers[t], o.reward.front(), bin_width)})
                            .second)
                        ++total;
        }
        if (total > limits.max_augmented_states)
            fail(ErrorKind::BinExplosion, "more than " + std::to_string(limits.max_augmented_states) +
                                              " reachable augmented states");
    }

    AugmentedSolution sol;
    sol.policy = Policy(Augmentation::AccReturn, bin_width);
    sol.policy.metadata = {"augmented-vi", spec};

    std::map<Point, double> next_values;
    for (const auto& p : layers[n])
        next_values[p] = eval_scalar_utility(spec, p.second);

    std::vector<double> q(static_cast<std::size_t>(mdp.num_actions));
    for (std::size_t t = n; t-- > 0;) {
        std::map<Point, double> values;
        for (const auto& [s, acc] : layers[t]) {
            if (mdp.is_terminal(s)) {
                values[{s, acc}] = eval_scalar_utility(spec, acc);
                continue;
            }
            for (int a = 0; a < mdp.num_actions; ++a) {
                double v = 0.0;
                for (const Outcome& o : mdp.outcomes(s, a))
                    if (o.prob > 0.0)
                        v += o.prob *
                             next_values.at({o.next_state, accumulate_return(acc, powers[t], o.reward.front(), bin_width)});
                q[static_cast<std::size_t>(a)] = v;
            }
            const int best = argmax_lowest(q);
            const DecisionKey key{static_cast<int>(t), s, acc};
            values[{s, acc}] = q[static_cast<std::size_t>(best)];
            sol.values[key] = q[static_cast<std::size_t>(best)];
            sol.policy.set(key, best);
        }
        next_values = std::move(values);
    }
    for (int s = 0; s < mdp.num_states; ++s) {
        const double p = mdp.initial_dist[static_cast<std::size_t>(s)];
        if (p > 0.0)
            sol.value += p * next_values.at({s, 0.0});
    }
    return sol;
}

Augmentation policy_class_for(const UtilitySpec& spec, Criterion criterion) {
    if (criterion == Criterion::CVaR)
        return Augmentation::None;
    if (criterion == Criterion::ESR && !is_linear(spec))
        return Augmentation::AccReturn;
    return Augmentation::Timestep;
}

namespace {

class PolicyEnumerator {
public:
    PolicyEnumerator(const Mdp& mdp, Augmentation aug, std::size_t max_policies,
                     const std::function<void(const Policy&)>& visit)
        : mdp_(mdp), policy_(aug), powers_(discount_powers(mdp.gamma, mdp.horizon)), max_policies_(max_policies),
          visit_(visit) {}

    void run() {
        std::set<std::pair<int, double>> frontier;
        for (int s = 0; s < mdp_.num_states; ++s)
            if (mdp_.initial_dist[static_cast<std::size_t>(s)] > 0.0)
                frontier.insert({s, 0.0});
        layer(0, frontier);
    }

private:
    using Frontier = std::set<std::pair<int, double>>;

    void layer(int t, const Frontier& frontier) {
        if (t >= mdp_.horizon || frontier.empty()) {
            if (++count_ > max_policies_)
                fail(ErrorKind::ExplosionCap, "more than " + std::to_string(max_policies_) + " policies");
            visit_(policy_);
            return;
        }
        // Decision points first met at this layer, in key order.
        std::vector<DecisionKey> fresh;
        for (const auto& [s, acc] : frontier) {
            if (mdp_.is_terminal(s))
                continue;
            const DecisionKey k = policy_.key(t, s, acc);
            if (!policy_.has(k) && (fresh.empty() || !(fresh.back() == k)))
                fresh.push_back(k);
        }
        std::sort(fresh.begin(), fresh.end());
        fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());

        std::vector<int> digits(fresh.size(), 0);
        while (true) {
            for (std::size_t i = 0; i < fresh.size(); ++i)
                policy_.set(fresh[i], digits[i]);
            layer(t + 1, successors(t, frontier));
            // Odometer, last key fastest.
            std::size_t i = fresh.size();
            while (i > 0 && digits[i - 1] == mdp_.num_actions - 1)
                digits[--i] = 0;
            if (i == 0)
                break;
            ++digits[i - 1];
        }
        for (const DecisionKey& k : fresh)
            policy_.erase(k);
    }

    Frontier successors(int t, const Frontier& frontier) const {
        const bool track_acc = policy_.augmentation() == Augmentation::AccReturn;
        Frontier next;
        for (const auto& [s, acc] : frontier) {
            if (mdp_.is_terminal(s))
                continue;
            const AugmentedState st{s, acc, t};
            const int a = policy_.require_action(st);
            for (const Outcome& o : mdp_.outcomes(s, a))
                if (o.prob > 0.0)
                    next.insert({o.next_state,
                                 track_acc ? policy_.advance(st, o.next_state, powers_[static_cast<std::size_t>(t)],
                                                             o.reward.front())
                                                 .acc_return
                                           : 0.0});
        }
        return next;
    }

    const Mdp& mdp_;
    Policy policy_;
    std::vector<double> powers_;
    std::size_t max_policies_;
    const std::function<void(const Policy&)>& visit_;
    std::size_t count_ = 0;
};

} // namespace

void for_each_policy(const Mdp& mdp, Augmentation augmentation, std::size_t max_policies,
                     const std::function<void(const Policy&)>& visit) {
    require_valid(mdp);
    require_scalar(mdp);
    PolicyEnumerator(mdp, augmentation, max_policies, visit).run();
}

EnumerationResult enumerate_policies(const Mdp& mdp, const UtilitySpec& spec, Criterion criterion,
                                     const EnumerationLimits& limits, bool keep_ranking) {
    check_criterion(spec, criterion);
    EnumerationResult result;
    std::optional<Policy> best;
    double best_value = -std::numeric_limits<double>::infinity();

    for_each_policy(mdp, policy_class_for(spec, criterion), limits.max_policies, [&](const Policy& p) {
        ++result.policy_count;
        const double v = evaluate(mdp, p, spec, criterion, limits).value;
        if (keep_ranking)
            result.ranking.push_back({p, v});
        // Strictly better, or tied and lexicographically smaller.
        const bool better = !best || v > best_value + 1e-12 * std::max(1.0, std::abs(best_value));
        const bool tied = best && !better && within_tie(v, best_value) && within_tie(best_value, v);
        if (better || (tied && action_map_less(p, *best))) {
            best = p;
            best_value = better ? v : std::max(v, best_value);
        }
    });

    result.best = *best;
    result.best.metadata = {"enumeration", spec};
    result.record = evaluate(mdp, result.best, spec, criterion, limits);
    if (keep_ranking)
        std::stable_sort(result.ranking.begin(), result.ranking.end(), [](const RankedPolicy& a, const RankedPolicy& b) {
            if (a.value != b.value)
                return a.value > b.value;
            return action_map_less(a.policy, b.policy);
        });
    return result;
}

} // namespace ubrl
