// prng.hpp: counter-based splitmix64. Draw i is a pure function of
// (seed, i), so seeds reproduce bit-identically across platforms and across
// reorderings of the consuming code.

#pragma once

#include <cstdint>

namespace fracburgers {

constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * kSplitmixGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit CounterRng(std::uint64_t s = 0) : seed(s) {}

    std::uint64_t next_u64() { return splitmix64(seed, counter++); }
    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }
    // Uniform in [-1, 1).
    double next_symmetric() { return 2.0 * next_unit() - 1.0; }
};

}  // namespace fracburgers
