#include "ubrl/simulation.hpp"

namespace ubrl {

int sample_initial_state(const Mdp& mdp, Rng& rng) {
    return static_cast<int>(
        rng.categorical(mdp.initial_dist.size(), [&](std::size_t i) { return mdp.initial_dist[i]; }));
}

const Outcome& sample_outcome(const Mdp& mdp, int state, int action, Rng& rng) {
    const auto& row = mdp.outcomes(state, action);
    return row[rng.categorical(row.size(), [&](std::size_t i) { return row[i].prob; })];
}

Trajectory simulate_episode(const Mdp& mdp, const Policy& policy, std::uint64_t rng_seed) {
    if (policy.augmentation() == Augmentation::AccReturn)
        require_scalar(mdp);
    Rng rng(rng_seed);
    const auto powers = discount_powers(mdp.gamma, mdp.horizon);
    Trajectory traj;
    AugmentedState st{sample_initial_state(mdp, rng), 0.0, 0};
    while (st.timestep < mdp.horizon && !mdp.is_terminal(st.env_state)) {
        const int a = policy.require_action(st);
        const Outcome& o = sample_outcome(mdp, st.env_state, a, rng);
        traj.steps.push_back({st.env_state, a, o.reward, o.next_state});
        st = policy.advance(st, o.next_state, powers[static_cast<std::size_t>(st.timestep)], o.reward.front());
    }
    return traj;
}

} // namespace ubrl
