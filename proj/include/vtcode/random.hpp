#pragma once

// Portable draws on top of std::mt19937_64. The standard distributions are
// implementation-defined, so we derive everything from raw engine output to keep
// seeded results identical across standard libraries.

#include <cstdint>
#include <random>

namespace vtcode {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent stream for trial `index` under a base seed.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

/// Uniform integer in [0, bound), bound >= 1. Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline int random_bit(Rng& rng) { return static_cast<int>(rng() >> 63); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace vtcode
