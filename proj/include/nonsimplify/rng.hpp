#pragma once

#include <cstdint>

namespace nonsimplify {

/// Counter-based uniform generator: draw i is a pure function of (seed, i),
/// so parallel replications and resumed streams agree bit for bit.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    /// Uniform variate in the open interval (0, 1) for a given counter.
    double uniform(std::uint64_t counter) const {
        std::uint64_t x = mix(seed_ ^ (counter * 0x9E3779B97F4A7C15ull) ^ 0xD1B54A32D192ED03ull);
        // 53 random bits, shifted to the open interval.
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

} // namespace nonsimplify
