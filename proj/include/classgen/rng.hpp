#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace classgen {

using Seed = std::uint64_t;

namespace detail {

/// SplitMix64 finalizer. Fixed constants, identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Derives a child seed from a master seed and an index tuple.
///
/// Counter-based: each index is folded into the state through the SplitMix64
/// mixer, so derive(s, a, b) == derive(s, a, b) across runs and platforms,
/// and distinct index tuples of the same arity map to distinct streams.
inline Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = detail::splitmix64(master);
    for (std::uint64_t idx : indices) {
        h = detail::splitmix64(h ^ detail::splitmix64(idx + 0x632be59bd9b4e019ULL));
    }
    return h;
}

template <typename... Ix>
inline Seed derive_seed(Seed master, Ix... indices) {
    return derive_seed(master, {static_cast<std::uint64_t>(indices)...});
}

/// Deterministic 64-bit generator (SplitMix64 stream) with hand-rolled
/// conversions. std:: distributions are implementation-defined, so every
/// draw here is specified down to the bit.
class Rng {
public:
    explicit Rng(Seed seed) : state_(detail::splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    bool bernoulli(double p) { return next_unit() < p; }

    /// Rademacher variable: -1 or +1 with equal probability.
    int rademacher() { return (next_u64() >> 63) ? +1 : -1; }

    /// Uniform integer in [0, bound) by rejection; unbiased.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via the Box-Muller transform (pair cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Samples an index from a discrete pmf (weights need not be normalized).
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double x = next_unit() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            x -= weights[i];
            if (x < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace classgen
