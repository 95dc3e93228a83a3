#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sbcsim {

// Seeded generator with distribution code fixed here rather than delegated to
// <random> distributions, whose output differs between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [lo, hi], rejection-sampled.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo;
        if (span == ~std::uint64_t{0}) return next();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range) - 1;
        std::uint64_t x;
        do x = next();
        while (x > limit);
        return lo + x % range;
    }

    /// Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double exponential(double mean);

    /// Stream seed for a named consumer, derived from the scenario seed.
    static std::uint64_t derive(std::uint64_t seed, std::string_view label);

private:
    std::mt19937_64 engine_;
};

}  // namespace sbcsim
