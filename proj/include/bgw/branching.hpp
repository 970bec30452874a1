#pragma once

// Offspring laws, their pgf F, the killed transition kernel on {1..K}, and
// one-step simulation. The subcritical mean m = F'(1) lies in (0,1).
//
// Two small evaluation helpers matter numerically everywhere downstream:
//
//   survival_ratio(p) = (1 - F(1-p)) / p = sum_j tau_j (1-p)^j,
//
// with tau_j = sum_{k>j} p_k the offspring tail sums — a positive polynomial
// in (1-p), so the ratio stays fully accurate as p -> 0 where the literal
// quotient cancels catastrophically; and
//
//   taylor_at_survival(p)[j] = F^{(j)}(1-p)/j! = sum_{k>=j} C(k,j) p_k (1-p)^{k-j},
//
// again all positive terms. Both are the backbone of the stable Yaglom
// iteration and of the Joffe diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"
#include "series.hpp"

namespace bgw {

class offspring_distribution {
public:
    // Validates: entries >= 0, sum = 1 within 1e-12, mean in (0,1).
    explicit offspring_distribution(std::vector<double> pmf) : pmf_(std::move(pmf)) {
        if (pmf_.empty()) throw invalid_pmf("offspring pmf is empty");
        double total = 0.0, mean = 0.0;
        for (std::size_t k = 0; k < pmf_.size(); ++k) {
            const double p = pmf_[k];
            if (!std::isfinite(p) || p < 0.0)
                throw invalid_pmf("offspring pmf entry " + std::to_string(k) +
                                  " is negative or non-finite");
            total += p;
            mean += static_cast<double>(k) * p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw invalid_pmf("offspring pmf sums to " + std::to_string(total));
        if (!(mean > 0.0) || mean >= 1.0)
            throw not_subcritical("offspring mean " + std::to_string(mean) +
                                  " outside (0,1)");
        mean_ = mean;
        while (pmf_.size() > 1 && pmf_.back() == 0.0) pmf_.pop_back(); // trim exact zeros
        tail_.assign(pmf_.size() - 1, 0.0); // tau_j = sum_{k>j} p_k, j = 0..d-1
        double acc = 0.0;
        for (std::size_t k = pmf_.size(); k-- > 1;) {
            acc += pmf_[k];
            tail_[k - 1] = acc;
        }
        cdf_.resize(pmf_.size());
        double c = 0.0;
        for (std::size_t k = 0; k < pmf_.size(); ++k) {
            c += pmf_[k];
            cdf_[k] = c;
        }
    }

    // F(z) = 1 - m(1-z): pmf (1-m, m).
    static offspring_distribution pure_death(double m) {
        if (!std::isfinite(m) || !(m > 0.0) || m >= 1.0)
            throw not_subcritical("pure_death: m must lie in (0,1)");
        return offspring_distribution(std::vector<double>{1.0 - m, m});
    }

    // p_k = (1-b) b^k, truncated at cumulative tail mass 1e-15 and
    // renormalized; mean b/(1-b), so subcriticality needs b < 1/2.
    static offspring_distribution geometric(double b) {
        if (!std::isfinite(b) || !(b > 0.0) || b >= 1.0)
            throw invalid_pmf("geometric: b must lie in (0,1)");
        if (b >= 0.5)
            throw not_subcritical("geometric: mean b/(1-b) >= 1 for b >= 1/2");
        // tail mass beyond degree d is b^{d+1}
        std::size_t d = 1;
        double tail = b * b;
        while (tail > 1e-18) {
            tail *= b;
            ++d;
        }
        std::vector<double> p(d + 1);
        double v = 1.0 - b, total = 0.0;
        for (std::size_t k = 0; k <= d; ++k) {
            p[k] = v;
            total += v;
            v *= b;
        }
        for (double& x : p) x /= total;
        return offspring_distribution(std::move(p));
    }

    const std::vector<double>& pmf() const noexcept { return pmf_; }
    std::size_t max_litter() const noexcept { return pmf_.size() - 1; }
    double mean() const noexcept { return mean_; }

    // tau_j = P(offspring > j), j = 0..d-1.
    const std::vector<double>& tail_sums() const noexcept { return tail_; }

    // F(z) by Horner.
    double pgf(double z) const noexcept {
        double acc = 0.0;
        for (std::size_t k = pmf_.size(); k-- > 0;) acc = acc * z + pmf_[k];
        return acc;
    }

    // F as an exact polynomial of degree max_litter().
    truncated_series pgf_series() const { return truncated_series(pmf_); }

    // (1 - F(1-p))/p evaluated as the tail-sum polynomial at q = 1-p.
    double survival_ratio(double p) const noexcept {
        const double q = 1.0 - p;
        double acc = 0.0;
        for (std::size_t j = tail_.size(); j-- > 0;) acc = acc * q + tail_[j];
        return acc;
    }

    // Taylor coefficients of F at q = 1-p: out[j] = F^{(j)}(q)/j!.
    std::vector<double> taylor_at_survival(double p) const {
        const double q = 1.0 - p;
        const std::size_t d = max_litter();
        std::vector<double> out(d + 1, 0.0);
        // C(k,j) q^{k-j} built per k by upward recurrence on j.
        std::vector<double> binom(d + 1, 0.0);
        for (std::size_t k = 0; k <= d; ++k) {
            const double pk = pmf_[k];
            // binom[j] <- C(k,j): update in place from C(k-1,j)
            for (std::size_t j = k; j-- > 1;) binom[j] += binom[j - 1];
            binom[k] = 1.0;
            binom[0] = 1.0;
            if (pk == 0.0) continue;
            double qpow = 1.0; // q^{k-j} built downward from j = k
            for (std::size_t j = k + 1; j-- > 0;) {
                out[j] += pk * binom[j] * qpow;
                qpow *= q;
            }
        }
        return out;
    }

    // One offspring draw via inverse CDF (linear scan; litters are short).
    std::size_t draw(rng_stream& g) const noexcept {
        const double u = uniform01(g);
        std::size_t k = 0;
        while (k + 1 < cdf_.size() && cdf_[k] <= u) ++k;
        return k;
    }

private:
    std::vector<double> pmf_;
    std::vector<double> tail_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
};

// ---------------------------------------------------------------------------
// killed transition kernel
// ---------------------------------------------------------------------------

// Row i of the kernel restricted to {1..K}: coefficients 1..K of F(z)^i,
// plus the absorbed mass [z^0]F^i and the deficit leaking past K.
struct kernel_row {
    std::vector<double> probs; // probs[j-1] = P_{ij}, j = 1..K
    double zero_mass = 0.0;
    double deficit = 0.0;
};

// K x K block of the killed kernel, rows built by repeated truncated
// multiplication (exact for coefficients <= K).
struct transition_block {
    std::size_t K = 0;
    std::vector<double> entries; // row-major, entries[(i-1)*K + (j-1)] = P_{ij}
    std::vector<double> zero_mass; // [z^0] F^i, i = 1..K
    std::vector<double> deficit;   // 1 - zero_mass - row sum

    double at(std::size_t i, std::size_t j) const noexcept {
        return entries[(i - 1) * K + (j - 1)];
    }
};

inline transition_block build_transition_block(const offspring_distribution& dist,
                                               std::size_t K) {
    transition_block blk;
    blk.K = K;
    blk.entries.assign(K * K, 0.0);
    blk.zero_mass.assign(K, 0.0);
    blk.deficit.assign(K, 0.0);
    const truncated_series F = truncate(dist.pgf_series(), K);
    truncated_series power = F; // F^i
    for (std::size_t i = 1; i <= K; ++i) {
        double sum = 0.0;
        for (std::size_t j = 1; j <= K; ++j) {
            const double v = power[j];
            blk.entries[(i - 1) * K + (j - 1)] = v;
            sum += v;
        }
        blk.zero_mass[i - 1] = power[0];
        blk.deficit[i - 1] = std::max(0.0, 1.0 - power[0] - sum);
        if (i < K) power = mul(power, F, K);
    }
    return blk;
}

inline kernel_row transition_row(const offspring_distribution& dist, std::size_t i,
                                 std::size_t K) {
    if (i < 1) throw invalid_config("transition_row: state must be >= 1");
    const truncated_series F = truncate(dist.pgf_series(), K);
    truncated_series power = F;
    for (std::size_t n = 1; n < i; ++n) power = mul(power, F, K);
    kernel_row row;
    row.probs.resize(K);
    double sum = 0.0;
    for (std::size_t j = 1; j <= K; ++j) {
        row.probs[j - 1] = power[j];
        sum += power[j];
    }
    row.zero_mass = power[0];
    row.deficit = std::max(0.0, 1.0 - power[0] - sum);
    return row;
}

// Z_{n+1} | Z_n = z: sum of z iid offspring draws; 0 is absorbing.
inline std::uint64_t simulate_step(const offspring_distribution& dist, std::uint64_t z,
                                   rng_stream& g) {
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < z; ++i) total += dist.draw(g);
    return total;
}

} // namespace bgw
