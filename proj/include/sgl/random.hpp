#pragma once

#include "sgl/types.hpp"

#include <limits>
#include <random>

namespace sgl {

/// Seeded generator with platform-independent floating-point draws.
/// std::uniform_real_distribution is implementation-defined, so uniform
/// doubles are built directly from the top 53 bits of mt19937_64.
class Rng {
public:
    explicit Rng(Seed seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1).
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    Index below(Index n) {
        const auto bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<Index>(x % bound);
    }

    /// Draw an index from a probability vector by inverse CDF.
    template <typename Probabilities>
    Index categorical(const Probabilities& probs) {
        const double u = uniform();
        double cdf = 0.0;
        const Index n = static_cast<Index>(probs.size());
        for (Index z = 0; z + 1 < n; ++z) {
            cdf += probs[z];
            if (u < cdf) return z;
        }
        return n - 1;
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent seeds from a base seed.
inline Seed derive_seed(Seed base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace sgl
