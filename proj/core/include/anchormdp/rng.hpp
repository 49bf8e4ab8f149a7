#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

// Counter-based random streams.
//
// Every random draw in the library is a pure function of a 64-bit seed and a
// small tuple of integer coordinates, so the result never depends on thread
// scheduling or on the order in which draws are made. The mixing function is
// the SplitMix64 output function (Steele, Lea & Flood, 2014). Sub-streams are
// derived by folding one coordinate at a time:
//
//     derive(seed, a)    = mix64(seed ^ mix64(a))
//     derive(seed, a, b) = derive(derive(seed, a), b)
//
// A 64-bit word is mapped to a double in [0, 1) from its top 53 bits.

namespace anchormdp::rng {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a) noexcept {
    return mix64(seed ^ mix64(a));
}

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return derive(derive(seed, a), b);
}

/// Uniform in [0, 1).
constexpr double to_unit(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Uniform in (0, 1).
constexpr double to_open_unit(std::uint64_t x) noexcept {
    return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

/// Sequential SplitMix64 generator. Satisfies UniformRandomBitGenerator, but
/// model constructors use the member helpers below rather than <random>
/// distributions, whose output is implementation-defined.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : counter_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        const std::uint64_t out = mix64(counter_);
        counter_ += kGolden;
        return out;
    }

    double uniform() noexcept { return to_unit((*this)()); }
    double open_uniform() noexcept { return to_open_unit((*this)()); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard exponential; strictly positive.
    double exponential() noexcept { return -std::log(open_uniform()); }

    /// Uniform integer in [0, n) by rejection, n > 0.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t counter_;
};

}  // namespace anchormdp::rng
