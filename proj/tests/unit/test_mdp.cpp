#include "oracles.hpp"
#include "random_mdp.hpp"

#include "ubrl/error.hpp"
#include "ubrl/mdp.hpp"
#include "ubrl/simulation.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ubrl;

namespace {

// Two states, one action: state 0 moves to 0 or 1 with probability 1/2.
Mdp branching() {
    Mdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.horizon = 1;
    m.initial_dist = {1.0, 0.0};
    m.transitions = {{{{0, 0.5, {0.0}}, {1, 0.5, {1.0}}}}, {{{1, 1.0, {0.0}}}}};
    return m;
}

Policy always(int action, const Mdp& m) {
    Policy p(Augmentation::None);
    for (int s = 0; s < m.num_states; ++s)
        p.set(p.key(0, s, 0.0), action);
    return p;
}

Trajectory with_rewards(std::vector<double> rs) {
    Trajectory t;
    for (double r : rs)
        t.steps.push_back({0, 0, {r}, 0});
    return t;
}

} // namespace

TEST_CASE("validate_mdp names the offending transition row") {
    Mdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.initial_dist = {1.0};
    m.transitions = {{{{0, 0.9, {0.0}}}}};
    const auto report = validate_mdp(m);
    REQUIRE_FALSE(report.empty());
    CHECK(std::any_of(report.begin(), report.end(),
                      [](const std::string& line) { return line.find("transition row (0,0) sums to 0.9") != std::string::npos; }));
    CHECK_THROWS_AS(require_valid(m), Error);
}

TEST_CASE("validate_mdp rejects a bad initial distribution") {
    Mdp m = branching();
    m.initial_dist = {0.5, 0.2};
    const auto report = validate_mdp(m);
    REQUIRE(report.size() == 1);
    CHECK(report[0].find("initial distribution sums to 0.7") != std::string::npos);
    try {
        require_valid(m);
        FAIL("expected InvalidMdp");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidMdp);
    }
}

TEST_CASE("validate_mdp rejects terminal rows that are not zero-reward self loops") {
    Mdp m = branching();
    m.terminal_states = {1};
    CHECK(validate_mdp(m).empty());
    m.transitions[1][0] = {{1, 1.0, {2.0}}};
    CHECK_FALSE(validate_mdp(m).empty());
}

TEST_CASE("scalar embedding wraps rewards and is idempotent") {
    ScalarMdp s;
    s.num_states = 4;
    s.num_actions = 1;
    s.horizon = 4;
    s.initial_dist = {1.0, 0.0, 0.0, 0.0};
    s.terminal_states = {3};
    s.transitions.resize(4);
    for (int i = 0; i < 3; ++i)
        s.transitions[i] = {{{i + 1, 1.0, i == 0 ? 3.0 : 1.0}}};
    s.transitions[3] = {{{3, 1.0, 0.0}}};

    const Mdp m = embed_scalar_as_momdp(s);
    CHECK(m.reward_dim == 1);
    CHECK(m.outcomes(0, 0)[0].reward == RewardVector{3.0});
    CHECK(validate_mdp(m).empty());
    CHECK(embed_scalar_as_momdp(m) == m);
}

TEST_CASE("discounted_return on hand-computed trajectories") {
    CHECK(discounted_return(with_rewards({1, 1, 1}), 1.0) == RewardVector{3.0});
    CHECK(discounted_return(with_rewards({2}), 0.5) == RewardVector{2.0});
    CHECK(discounted_return(with_rewards({1, 2, 4}), 0.5) == RewardVector{3.0});
    CHECK(discounted_return(with_rewards({7, 5, 4}), 0.0) == RewardVector{7.0});
    CHECK(discounted_return(with_rewards({}), 0.9).empty());
}

TEST_CASE("discounted_return is linear in the rewards") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> rs;
        const int n = 1 + static_cast<int>(rng.index(6));
        for (int i = 0; i < n; ++i)
            rs.push_back(static_cast<double>(rng.index(21)) - 10.0);
        const double gamma = rng.uniform();
        const double base = discounted_return(with_rewards(rs), gamma)[0];
        for (double c : {-2.0, 0.5, 10.0}) {
            std::vector<double> scaled = rs;
            for (double& r : scaled)
                r *= c;
            CHECK(discounted_return(with_rewards(scaled), gamma)[0] == doctest::Approx(c * base).epsilon(1e-12));
        }
    }
}

TEST_CASE("simulate_episode is a pure function of the seed") {
    Rng rng(17);
    for (int i = 0; i < 30; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        const Policy p = always(0, m);
        CHECK(simulate_episode(m, p, 42) == simulate_episode(m, p, 42));
    }
}

TEST_CASE("simulate_episode stops at the horizon or a terminal state") {
    Mdp m = branching();
    m.horizon = 5;
    m.terminal_states = {1};
    const Policy p = always(0, m);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Trajectory t = simulate_episode(m, p, seed);
        REQUIRE(!t.steps.empty());
        CHECK(t.steps.size() <= 5);
        if (t.steps.size() < 5)
            CHECK(t.steps.back().next_state == 1);
        for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
            CHECK(t.steps[i].next_state == 0);
    }
}

TEST_CASE("simulated branch frequencies match the transition probabilities") {
    const Mdp m = branching();
    const Policy p = always(0, m);
    std::size_t hits = 0;
    const std::size_t trials = 10'000;
    for (std::uint64_t seed = 0; seed < trials; ++seed)
        hits += simulate_episode(m, p, seed).steps[0].next_state == 1;
    CHECK(oracle::within_three_sigma(hits, trials, 0.5));
}

TEST_CASE("MDP JSON round trip") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const Mdp m = testing_support::random_mdp(rng);
        CHECK(mdp_from_json(to_json(m)) == m);
        CHECK(mdp_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
    }
}
