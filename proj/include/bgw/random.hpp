#pragma once

// Reproducible randomness. Everything is built on std::mt19937_64 (fully
// specified by the standard) plus hand-rolled transforms, so identical seeds
// give bit-identical results on every platform. std::uniform_real_distribution
// and friends are deliberately avoided: their output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"

namespace bgw {

using rng_stream = std::mt19937_64;

inline rng_stream make_stream(std::uint64_t seed) { return rng_stream(seed); }

// Uniform on [0,1) with 53 random bits.
inline double uniform01(rng_stream& g) noexcept {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Deterministic per-shard seed derivation (splitmix64 finalizer over a
// golden-ratio walk). Shards simulated serially in shard order reproduce the
// same report as any parallel schedule would.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t shard) noexcept {
    std::uint64_t x = master + 0x9E3779B97F4A7C15ull * (shard + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

// Standard normal via Box-Muller on uniform01 (used only for the documented
// far-tail CLT shortcut in the compound sampler).
inline double standard_normal(rng_stream& g) noexcept {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Inverse-CDF sampler over a finite pmf indexed `first..first+n-1`.
// The pmf may be a sub-probability; draws beyond the covered mass report an
// overflow index (`first + n`) for the caller to resolve (clamp, extend, ...).
class discrete_sampler {
public:
    discrete_sampler() = default;

    discrete_sampler(const std::vector<double>& pmf, std::size_t first) : first_(first) {
        cdf_.reserve(pmf.size());
        double acc = 0.0;
        for (double p : pmf) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw invalid_pmf("discrete_sampler: pmf entries must be finite and >= 0");
            acc += p;
            cdf_.push_back(acc);
        }
    }

    std::size_t size() const noexcept { return cdf_.size(); }
    double total_mass() const noexcept { return cdf_.empty() ? 0.0 : cdf_.back(); }
    double cdf_at_end() const noexcept { return total_mass(); }

    // Maps u in [0,1) to a value; u >= total mass yields the overflow index.
    std::size_t value_for(double u) const noexcept {
        std::size_t lo = 0, hi = cdf_.size();
        while (lo < hi) { // first index with cdf > u
            const std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] > u)
                hi = mid;
            else
                lo = mid + 1;
        }
        return first_ + lo;
    }

    std::size_t overflow_value() const noexcept { return first_ + cdf_.size(); }

    std::size_t draw(rng_stream& g) const noexcept { return value_for(uniform01(g)); }

private:
    std::vector<double> cdf_;
    std::size_t first_ = 0;
};

} // namespace bgw
