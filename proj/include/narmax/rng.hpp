#pragma once

// Seeded random numbers for reproducible experiments. The engine is
// std::mt19937_64, whose output sequence is fixed by the standard; the
// uniform and normal transforms are written out explicitly (53-bit mantissa
// scaling, Box-Muller) instead of using std::*_distribution, whose output is
// implementation-defined. Substreams are derived with the SplitMix64
// finalizer: seed_for(base, i, j, ...) folds each index into the state, so
// every (cell, realization, purpose) tuple owns an independent stream.

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <random>

namespace narmax {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic substream seed for the given index path.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = detail::splitmix64(base);
    for (std::uint64_t part : path) {
        state = detail::splitmix64(state ^ detail::splitmix64(part + 0x9e3779b97f4a7c15ULL));
    }
    return state;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace narmax
