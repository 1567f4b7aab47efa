#pragma once

#include <cstdint>
#include <random>

namespace ubrl {

/// Seeded generator with platform-independent draws (std distributions are
/// implementation-defined, mt19937_64 output is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    /// Index drawn from probabilities listed by `prob_of(i)` for i < n.
    /// Falls back to the last positive entry when rounding leaves a sliver.
    template <class ProbOf>
    std::size_t categorical(std::size_t n, ProbOf prob_of) {
        const double u = uniform();
        double cumulative = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = prob_of(i);
            if (p <= 0.0)
                continue;
            last_positive = i;
            cumulative += p;
            if (u < cumulative)
                return i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace ubrl
