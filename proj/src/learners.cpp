#include "ubrl/learners.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"
#include "ubrl/random.hpp"
#include "ubrl/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ubrl {

namespace {

constexpr double greedy_tolerance = 1e-9;

int argmax(const double* q, int n) {
    double best = q[0];
    for (int a = 1; a < n; ++a)
        best = std::max(best, q[a]);
    const double tol = greedy_tolerance * std::max(1.0, std::abs(best));
    for (int a = 0; a < n; ++a)
        if (q[a] >= best - tol)
            return a;
    return 0;
}

std::string_view schedule_name(StepSchedule s) { return s == StepSchedule::Fixed ? "fixed" : "harmonic"; }

} // namespace

void validate_config(const TrainingConfig& config) {
    if (config.episodes == 0)
        fail(ErrorKind::ConfigError, "episode budget must be positive");
    if (!(config.step_size > 0.0 && config.step_size <= 1.0))
        fail(ErrorKind::ConfigError, "step_size must lie in (0,1]");
    if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0))
        fail(ErrorKind::ConfigError, "epsilon must lie in [0,1]");
}

nlohmann::json to_json(const TrainingConfig& config) {
    return {{"episodes", config.episodes},
            {"step_size", format_decimal(config.step_size)},
            {"epsilon", format_decimal(config.epsilon)},
            {"seed", config.seed},
            {"schedule", std::string(schedule_name(config.schedule))}};
}

TrainingConfig training_config_from_json(const nlohmann::json& j) {
    try {
        TrainingConfig c;
        c.episodes = j.at("episodes").get<std::size_t>();
        c.step_size = json_decimal(j.at("step_size"));
        c.epsilon = json_decimal(j.at("epsilon"));
        c.seed = j.at("seed").get<std::uint64_t>();
        const std::string sched = j.value("schedule", "fixed");
        if (sched == "fixed")
            c.schedule = StepSchedule::Fixed;
        else if (sched == "harmonic")
            c.schedule = StepSchedule::Harmonic;
        else
            fail(ErrorKind::ConfigError, "unknown step schedule '" + sched + "'");
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("malformed training config: ") + e.what());
    }
}

TrainingConfig default_training_config(std::string_view env_name, UtilityFamily family) {
    TrainingConfig c;
    c.seed = 0;
    if (env_name == "mining-world") {
        // Stochastic rewards: sample averages with a small floor.
        c.episodes = 400'000;
        c.step_size = 1e-6;
        c.epsilon = 0.5;
        c.schedule = StepSchedule::Harmonic;
    } else if (env_name == "gold-nuggets") {
        // The far nugget sits 6 steps out; uniform behaviour finds it far
        // more often than an epsilon-greedy walk anchored on the near one.
        c.episodes = 50'000;
        c.step_size = 1.0;
        c.epsilon = 1.0;
    } else if (env_name == "harvest-world") {
        c.episodes = 20'000;
        c.step_size = 1.0;
        c.epsilon = 0.5;
    } else {
        c.episodes = 100'000;
        c.step_size = 1e-6;
        c.epsilon = 0.3;
        c.schedule = StepSchedule::Harmonic;
    }
    (void)family;
    return c;
}

double ConditionedQTable::value(std::size_t point, const DecisionKey& key, int action) const {
    auto it = rows.find(key);
    if (it == rows.end())
        return 0.0;
    return q.at(point)[it->second * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(action)];
}

double ConditionedQTable::max_value(std::size_t point, const DecisionKey& key) const {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_actions; ++a)
        best = std::max(best, value(point, key, a));
    return best;
}

int ConditionedQTable::greedy_action(std::size_t point, const DecisionKey& key) const {
    auto it = rows.find(key);
    if (it == rows.end())
        return 0;
    return argmax(&q.at(point)[it->second * static_cast<std::size_t>(num_actions)], num_actions);
}

Policy ConditionedQTable::greedy_policy(const Mdp& mdp, std::size_t point) const {
    Policy policy(augmentation);
    const bool track_acc = augmentation == Augmentation::AccReturn;
    const auto powers = discount_powers(mdp.gamma, mdp.horizon);
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
            const DecisionKey key = policy.key(st);
            const int a = greedy_action(point, key);
            policy.set(key, a);
            for (const auto& o : mdp.outcomes(s, a)) {
                if (o.prob <= 0.0)
                    continue;
                const double acc2 =
                    track_acc ? policy.advance(st, o.next_state, powers[static_cast<std::size_t>(t)], o.reward.front())
                                    .acc_return
                              : 0.0;
                next.insert({o.next_state, acc2});
            }
        }
        frontier = std::move(next);
    }
    return policy;
}

namespace {

// Shared episode loop. `backup(reward, end, next_row, acc_after, targets)`
// fills in every table's target for one transition.
struct Learner {
    const Mdp& mdp;
    const TrainingConfig& config;
    ConditionedQTable& table;
    std::vector<double> powers;

    std::size_t row_of(const DecisionKey& key) {
        auto [it, inserted] = table.rows.emplace(key, table.rows.size());
        if (inserted) {
            const auto width = static_cast<std::size_t>(table.num_actions);
            for (auto& q : table.q)
                q.resize(q.size() + width, 0.0);
            table.visits.resize(table.visits.size() + width, 0);
        }
        return it->second;
    }

    template <class Backup, class EpisodeEnd>
    void run(Backup backup, EpisodeEnd episode_end) {
        Rng rng(config.seed);
        const std::size_t points = table.q.size();
        const auto width = static_cast<std::size_t>(table.num_actions);
        std::vector<double> targets(points);
        Policy keyer(table.augmentation);

        for (std::size_t episode = 0; episode < config.episodes; ++episode) {
            const std::size_t behaviour = rng.index(points);
            AugmentedState st{sample_initial_state(mdp, rng), 0.0, 0};
            while (st.timestep < mdp.horizon && !mdp.is_terminal(st.env_state)) {
                const std::size_t row = row_of(keyer.key(st));
                int a = 0;
                if (rng.uniform() < config.epsilon)
                    a = static_cast<int>(rng.index(width));
                else
                    a = argmax(&table.q[behaviour][row * width], table.num_actions);
                const Outcome& o = sample_outcome(mdp, st.env_state, a, rng);
                const double r = o.reward.front();
                const AugmentedState st2 =
                    keyer.advance(st, o.next_state, powers[static_cast<std::size_t>(st.timestep)], r);
                const bool end = st2.timestep >= mdp.horizon || mdp.is_terminal(st2.env_state);
                const std::size_t next_row = end ? 0 : row_of(keyer.key(st2));

                const std::size_t cell = row * width + static_cast<std::size_t>(a);
                const auto n = ++table.visits[cell];
                const double step = config.schedule == StepSchedule::Fixed
                                        ? config.step_size
                                        : std::max(config.step_size, 1.0 / static_cast<double>(n));
                backup(r, end, next_row, st2.acc_return, targets);
                for (std::size_t k = 0; k < points; ++k) {
                    double& q = table.q[k][cell];
                    q += step * (targets[k] - q);
                }
                st = st2;
            }
            episode_end(episode, behaviour, st.acc_return);
        }
    }

    double next_max(std::size_t k, std::size_t next_row) const {
        const auto width = static_cast<std::size_t>(table.num_actions);
        const double* q = &table.q[k][next_row * width];
        return *std::max_element(q, q + width);
    }
};

ConditionedQTable empty_table(const Mdp& mdp, const ParameterGrid& grid, Augmentation aug) {
    ConditionedQTable table;
    table.grid = grid;
    table.augmentation = aug;
    table.num_actions = mdp.num_actions;
    table.q.assign(grid.size(), {});
    return table;
}

void finish(TrainingResult& result, const Mdp& mdp, Criterion criterion, const std::string& solver) {
    auto& set = result.coverage;
    set.criterion = criterion;
    set.solver = solver;
    set.grid = result.table.grid;
    for (std::size_t k = 0; k < set.grid.size(); ++k) {
        auto entry = make_entry(mdp, set.grid.values[k], result.table.greedy_policy(mdp, k), set.grid.point(k),
                                criterion);
        entry.policy.metadata.solver = solver;
        set.entries.push_back(std::move(entry));
    }
    mark_duplicates(set);
}

} // namespace

TrainingResult train_conditioned_q(const Mdp& mdp, const ParameterGrid& grid, const TrainingConfig& config,
                                   const LearnerHooks& hooks) {
    validate_config(config);
    require_valid(mdp);
    require_scalar(mdp);
    const auto family = grid.family();
    if (applies_to(family) != UtilityInput::ScalarReturn)
        fail(ErrorKind::WrongFamily, "the conditioned learner needs a utility of the scalar return");
    if (grid.size() == 0)
        fail(ErrorKind::InvalidRange, "empty parameter grid");

    const bool linear = family == UtilityFamily::Identity;
    TrainingResult result;
    result.table = empty_table(mdp, grid, linear ? Augmentation::Timestep : Augmentation::AccReturn);

    std::vector<UtilitySpec> specs;
    for (std::size_t k = 0; k < grid.size(); ++k)
        specs.push_back(grid.point(k));

    Learner learner{mdp, config, result.table, discount_powers(mdp.gamma, mdp.horizon)};
    auto backup = [&](double r, bool end, std::size_t next_row, double acc, std::vector<double>& targets) {
        for (std::size_t k = 0; k < specs.size(); ++k) {
            if (linear) {
                targets[k] = r + (end ? 0.0 : mdp.gamma * learner.next_max(k, next_row));
            } else if (end) {
                targets[k] = eval_scalar_utility(specs[k], acc);
                if (hooks.on_utility_target)
                    hooks.on_utility_target(k, specs[k]);
            } else {
                targets[k] = learner.next_max(k, next_row);
            }
        }
    };
    auto episode_end = [&](std::size_t episode, std::size_t k, double ret) {
        if (hooks.on_episode)
            hooks.on_episode({episode, k, ret, eval_scalar_utility(specs[k], ret)});
    };
    learner.run(backup, episode_end);

    finish(result, mdp, Criterion::ESR, "conditioned-q");
    return result;
}

TrainingResult train_multi_gamma_q(const Mdp& mdp, const ParameterGrid& gamma_grid, const TrainingConfig& config,
                                   const LearnerHooks& hooks) {
    validate_config(config);
    require_valid(mdp);
    require_scalar(mdp);
    if (gamma_grid.family() != UtilityFamily::Discount)
        fail(ErrorKind::WrongFamily, "the multi-gamma learner needs a discount utility grid");
    if (gamma_grid.size() == 0)
        fail(ErrorKind::InvalidRange, "empty parameter grid");

    TrainingResult result;
    result.table = empty_table(mdp, gamma_grid, Augmentation::Timestep);
    const std::vector<double>& gammas = gamma_grid.values;

    Learner learner{mdp, config, result.table, discount_powers(mdp.gamma, mdp.horizon)};
    auto backup = [&](double r, bool end, std::size_t next_row, double, std::vector<double>& targets) {
        for (std::size_t k = 0; k < gammas.size(); ++k) {
            targets[k] = r + (end ? 0.0 : gammas[k] * learner.next_max(k, next_row));
            if (hooks.on_utility_target)
                hooks.on_utility_target(k, gamma_grid.point(k));
        }
    };
    auto episode_end = [&](std::size_t episode, std::size_t k, double ret) {
        if (hooks.on_episode)
            hooks.on_episode({episode, k, ret, ret});
    };
    learner.run(backup, episode_end);

    finish(result, mdp, Criterion::PerGamma, "multi-gamma-q");
    return result;
}

} // namespace ubrl
