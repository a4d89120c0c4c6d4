#pragma once
// Portable pseudo-random generation.
//
// Standard library engines are portable but the distributions are not, so all
// sampling used by the library goes through the routines here:
//   - SplitMix64 as the core 64-bit generator,
//   - 53-bit mantissa uniform doubles in [0, 1),
//   - Lemire's multiply-shift with rejection for bounded integers,
//   - Box-Muller (cosine branch, one normal per call) for Gaussians,
//   - forward Fisher-Yates for permutations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string_view>
#include <vector>

namespace coprior {

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, bound), bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        __extension__ using u128 = unsigned __int128;
        u128 m = static_cast<u128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<u128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // 1 - u lies in (0, 1], so the log is finite.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

// Mixes a seed with a stage tag (FNV-1a of the tag) and an optional counter
// into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t counter = 0) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    SplitMix64 mix(seed ^ h);
    SplitMix64 second(mix.next() + counter * 0xD1B54A32D192ED03ULL);
    return second.next();
}

inline std::vector<std::size_t> random_permutation(std::size_t n, SplitMix64& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

}  // namespace coprior
