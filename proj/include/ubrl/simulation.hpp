#pragma once

#include "ubrl/mdp.hpp"
#include "ubrl/policy.hpp"
#include "ubrl/random.hpp"

#include <cstdint>

namespace ubrl {

/// Draws an initial state from mu.
int sample_initial_state(const Mdp& mdp, Rng& rng);

/// Draws one outcome of T[s][a].
const Outcome& sample_outcome(const Mdp& mdp, int state, int action, Rng& rng);

/// Runs one episode of at most `horizon` steps, stopping early on entering a
/// terminal state. Pure in (mdp, policy, seed). Throws PolicyUndefined when
/// a visited decision point has no action.
Trajectory simulate_episode(const Mdp& mdp, const Policy& policy, std::uint64_t rng_seed);

} // namespace ubrl
