#include "oracles.hpp"
#include "random_mdp.hpp"

#include "ubrl/coverage.hpp"
#include "ubrl/environments.hpp"
#include "ubrl/error.hpp"
#include "ubrl/exact_solver.hpp"

#include <doctest.h>

using namespace ubrl;

namespace {

Mdp bandit(std::vector<std::vector<Outcome>> arms) {
    Mdp m;
    m.num_states = 1;
    m.num_actions = static_cast<int>(arms.size());
    m.horizon = 1;
    m.initial_dist = {1.0};
    m.transitions = {std::move(arms)};
    return m;
}

// Arm A pays 5, arm B pays 0 or 10 on a fair coin.
Mdp coin_bandit() { return bandit({{{0, 1.0, {5.0}}}, {{0, 0.5, {0.0}}, {0, 0.5, {10.0}}}}); }

Policy stationary(const Mdp& m, int action) {
    Policy p(Augmentation::None);
    for (int s = 0; s < m.num_states; ++s)
        p.set(p.key(0, s, 0.0), action);
    return p;
}

ReturnDistribution as_distribution(const oracle::Dist& d) {
    std::vector<Atom> atoms;
    for (const auto& [v, p] : d)
        atoms.push_back({v, p});
    return ReturnDistribution::from_atoms(atoms);
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::ParseError;
}

} // namespace

TEST_CASE("return distribution of simple MDPs") {
    const Mdp det = bandit({{{0, 1.0, {3.0}}}});
    const auto d = enumerate_return_distribution(det, stationary(det, 0));
    REQUIRE(d.size() == 1);
    CHECK(d.atoms()[0] == Atom{3.0, 1.0});

    const Mdp coin = coin_bandit();
    const auto c = enumerate_return_distribution(coin, stationary(coin, 1));
    CHECK(c.atoms() == std::vector<Atom>{{0.0, 0.5}, {10.0, 0.5}});
}

TEST_CASE("enumerated distributions match forward mass propagation") {
    Rng rng(101);
    for (int i = 0; i < 60; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        const Policy p = stationary(m, static_cast<int>(rng.index(static_cast<std::size_t>(m.num_actions))));
        const auto got = enumerate_return_distribution(m, p);
        const auto want = as_distribution(oracle::forward_distribution(m, p));
        CHECK(total_variation(got, want) < 1e-9);
        CHECK(got.mean() == doctest::Approx(want.mean()).epsilon(1e-12));
    }
}

TEST_CASE("SER and ESR on the coin bandit") {
    const Mdp m = coin_bandit();
    const UtilitySpec sat = utility::Satisficing{5.0};
    CHECK(evaluate_ser(m, stationary(m, 1), sat).value == doctest::Approx(0.0));
    CHECK(evaluate_esr(m, stationary(m, 1), sat).value == doctest::Approx(-5.0));
    CHECK(evaluate_ser(m, stationary(m, 0), sat).value == doctest::Approx(0.0));
    CHECK(evaluate_esr(m, stationary(m, 0), sat).value == doctest::Approx(0.0));

    const auto ser = enumerate_policies(m, sat, Criterion::SER);
    CHECK(ser.best.require_action({0, 0.0, 0}) == 0);
    CHECK(ser.record.value == doctest::Approx(0.0));
    const auto esr = enumerate_policies(m, sat, Criterion::ESR);
    CHECK(esr.best.require_action({0, 0.0, 0}) == 0);
    CHECK(esr.ranking.size() == 2);
    CHECK(esr.ranking[1].value == doctest::Approx(-5.0));
}

TEST_CASE("identity SER and ESR agree on every policy") {
    Rng rng(7);
    for (int i = 0; i < 40; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        for (int a = 0; a < m.num_actions; ++a) {
            const auto p = stationary(m, a);
            const double ser = evaluate_ser(m, p, utility::Identity{}).value;
            const double esr = evaluate_esr(m, p, utility::Identity{}).value;
            CHECK(ser == doctest::Approx(esr).epsilon(1e-9));
            CHECK(evaluate_ser(m, p, utility::Identity{}).expected_return == doctest::Approx(ser).epsilon(1e-9));
        }
    }
}

TEST_CASE("ESR stays within the utility's range over the support") {
    Rng rng(8);
    const UtilitySpec u = utility::Satisficing{1.0};
    for (int i = 0; i < 40; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        const auto p = stationary(m, 0);
        const auto rec = evaluate_esr(m, p, u);
        REQUIRE(rec.distribution);
        double lo = 1e300, hi = -1e300;
        for (const auto& a : rec.distribution->atoms()) {
            lo = std::min(lo, eval_scalar_utility(u, a.value));
            hi = std::max(hi, eval_scalar_utility(u, a.value));
        }
        CHECK(rec.value >= lo - 1e-9);
        CHECK(rec.value <= hi + 1e-9);
    }
}

TEST_CASE("value_iteration on a discounted self loop") {
    Mdp m = bandit({{{0, 1.0, {1.0}}}});
    m.gamma = 0.5;
    m.horizon = 3;
    const auto vi = value_iteration(m);
    CHECK(vi.value == doctest::Approx(1.75));
    CHECK(vi.values[0][0] == doctest::Approx(1.75));
    CHECK(value_iteration(m, 1.0).value == doctest::Approx(3.0));
}

TEST_CASE("value_iteration matches backward recursion and policy enumeration") {
    Rng rng(13);
    for (int i = 0; i < 40; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        const auto vi = value_iteration(m);
        CHECK(vi.value == doctest::Approx(oracle::optimal_value(m, m.gamma)).epsilon(1e-9));
        const auto best = enumerate_policies(m, utility::Identity{}, Criterion::SER);
        CHECK(evaluate_ser(m, vi.policy, utility::Identity{}).value == doctest::Approx(best.record.value).epsilon(1e-9));
    }
}

TEST_CASE("value_iteration greedy policy is invariant under reward scaling") {
    Rng rng(21);
    for (int i = 0; i < 40; ++i) {
        Mdp m = testing_support::random_mdp(rng);
        const auto before = value_iteration(m);
        for (auto& row : m.transitions)
            for (auto& outs : row)
                for (auto& o : outs)
                    o.reward[0] *= 3.0;
        const auto after = value_iteration(m);
        CHECK(before.policy.same_actions(after.policy));
        CHECK(after.value == doctest::Approx(3.0 * before.value).epsilon(1e-9));
    }
}

TEST_CASE("augmented value iteration with identity utility reproduces value_iteration") {
    Rng rng(34);
    for (int i = 0; i < 40; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        CHECK(augmented_value_iteration(m, utility::Identity{}).value ==
              doctest::Approx(value_iteration(m).value).epsilon(1e-9));
    }
}

TEST_CASE("augmented value iteration finds the ESR optimum") {
    Rng rng(55);
    for (int i = 0; i < 30; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        const UtilitySpec u = utility::Satisficing{1.0};
        const auto sol = augmented_value_iteration(m, u);
        const auto oracle_value = oracle::optimal_esr(m, [&](double x) { return eval_scalar_utility(u, x); });
        CHECK(sol.value == doctest::Approx(oracle_value).epsilon(1e-9));
        CHECK(evaluate_esr(m, sol.policy, u).value == doctest::Approx(oracle_value).epsilon(1e-9));
    }
}

TEST_CASE("identity bandit picks the larger reward") {
    const Mdp m = bandit({{{0, 1.0, {1.0}}}, {{0, 1.0, {2.0}}}});
    const auto res = enumerate_policies(m, utility::Identity{}, Criterion::SER);
    CHECK(res.best.require_action({0, 0.0, 0}) == 1);
    CHECK(res.record.value == 2.0);
    CHECK(res.policy_count == 2);
}

TEST_CASE("enumeration caps") {
    Mdp m = bandit({{{0, 0.5, {0.0}}, {0, 0.5, {1.0}}}});
    m.horizon = 12;
    CHECK(kind_of([&] { enumerate_return_distribution(m, stationary(m, 0), std::nullopt, 100); }) ==
          ErrorKind::ExplosionCap);

    Mdp wide = bandit({{{0, 1.0, {0.0}}}, {{0, 1.0, {1.0}}}});
    wide.horizon = 12;
    EnumerationLimits small;
    small.max_policies = 50;
    CHECK(kind_of([&] { enumerate_policies(wide, utility::Identity{}, Criterion::SER, small); }) == ErrorKind::ExplosionCap);

    EnumerationLimits few_states;
    few_states.max_augmented_states = 5;
    Mdp spread = bandit({{{0, 0.5, {0.0}}, {0, 0.5, {1.0}}}, {{0, 1.0, {0.5}}}});
    spread.horizon = 8;
    CHECK(kind_of([&] { augmented_value_iteration(spread, utility::Satisficing{2.0}, 0.0, few_states); }) ==
          ErrorKind::BinExplosion);
}

TEST_CASE("criterion and utility compatibility") {
    CHECK_NOTHROW(check_criterion(utility::Cvar{0.5}, Criterion::CVaR));
    CHECK(kind_of([] { check_criterion(utility::Cvar{0.5}, Criterion::ESR); }) == ErrorKind::WrongFamily);
    CHECK(kind_of([] { check_criterion(utility::Mining{}, Criterion::CVaR); }) == ErrorKind::WrongFamily);
    CHECK(kind_of([] { check_criterion(utility::Satisficing{}, Criterion::PerGamma); }) == ErrorKind::WrongFamily);
}

TEST_CASE("coverage set with a single identity point is the value_iteration policy") {
    const Mdp m = make_gold_nuggets();
    const auto grid = make_grid(UtilityFamily::Identity, 0.0, 0.0, 1);
    const auto set = solve_coverage_set(m, grid, Criterion::SER, SolverKind::Exact);
    REQUIRE(set.entries.size() == 1);
    CHECK(set.distinct_policy_count() == 1);
    CHECK(same_reachable_actions(m, set.entries[0].policy, value_iteration(m).policy));
}

TEST_CASE("per-gamma coverage on gold nuggets flips from near to far") {
    const Mdp m = make_gold_nuggets();
    ParameterGrid grid{utility::Discount{0.1}, {0.1, 0.99}};
    const auto set = solve_coverage_set(m, grid, Criterion::PerGamma, SolverKind::PerGammaVI);
    REQUIRE(set.entries.size() == 2);
    CHECK(set.distinct_policy_count() == 2);
    CHECK(set.switch_indices() == std::vector<std::size_t>{1});
    CHECK(enumerate_return_distribution(m, set.entries[0].policy).mean() == 2.0);
    CHECK(enumerate_return_distribution(m, set.entries[1].policy).mean() == 10.0);
    for (const auto& e : set.entries) {
        const auto best = enumerate_policies(m, grid.point(&e - set.entries.data()), Criterion::PerGamma);
        CHECK(e.record.value == doctest::Approx(best.record.value).epsilon(1e-9));
    }
}

TEST_CASE("refining a grid keeps every distinct policy") {
    const Mdp m = make_mining_world();
    const auto coarse = solve_coverage_set(m, make_grid(utility::Mining{}, 0.0, 20.0, 5), Criterion::ESR, SolverKind::Exact);
    const auto fine = solve_coverage_set(m, make_grid(utility::Mining{}, 0.0, 20.0, 21), Criterion::ESR, SolverKind::Exact);
    for (const auto& c : coarse.entries) {
        bool found = false;
        for (const auto& f : fine.entries)
            found = found || same_reachable_actions(m, c.policy, f.policy);
        CHECK(found);
    }
    CHECK(fine.distinct_policy_count() >= coarse.distinct_policy_count());
}

TEST_CASE("coverage results do not depend on the thread count") {
    const Mdp m = make_mining_world();
    const auto grid = make_grid(utility::Mining{}, 0.0, 20.0, 9);
    CoverageOptions one, four;
    four.threads = 4;
    const auto a = solve_coverage_set(m, grid, Criterion::ESR, SolverKind::AugmentedVI, one);
    const auto b = solve_coverage_set(m, grid, Criterion::ESR, SolverKind::AugmentedVI, four);
    CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("no solver beats enumeration") {
    const Mdp m = make_mining_world();
    const auto grid = make_grid(utility::Mining{}, 0.0, 20.0, 6);
    const auto set = solve_coverage_set(m, grid, Criterion::ESR, SolverKind::AugmentedVI);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto best = enumerate_policies(m, grid.point(i), Criterion::ESR, {}, false);
        CHECK(set.entries[i].record.value <= best.record.value + 1e-9);
        CHECK(set.entries[i].record.value == doctest::Approx(best.record.value).epsilon(1e-9));
    }
}

TEST_CASE("coverage JSON round trip") {
    const Mdp m = make_risky_path();
    const auto set = solve_coverage_set(m, make_grid(UtilityFamily::Cvar, 0.1, 1.0, 4), Criterion::CVaR, SolverKind::Exact);
    const auto back = coverage_from_json(nlohmann::json::parse(to_json(set).dump()));
    CHECK(to_json(back).dump() == to_json(set).dump());
}
