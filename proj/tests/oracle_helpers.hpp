#pragma once

// Independent reference computations for the test suite. Everything here is
// deliberately written by a different route than the library code it checks:
// brute-force convolutions, textbook series expansions, log-space
// evaluations, closed forms of the linear-fractional (geometric-offspring)
// family, and direct band sums.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// plain O(K^2) Cauchy product
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b,
                                    std::size_t K) {
    std::vector<double> out(K + 1, 0.0);
    for (std::size_t i = 0; i < a.size() && i <= K; ++i)
        for (std::size_t j = 0; j < b.size() && i + j <= K; ++j) out[i + j] += a[i] * b[j];
    return out;
}

// i-fold self-convolution of a pmf, truncated at K
inline std::vector<double> convolve_power(const std::vector<double>& pmf, int times,
                                          std::size_t K) {
    std::vector<double> out(K + 1, 0.0);
    out[0] = 1.0;
    for (int t = 0; t < times; ++t) out = convolve(out, pmf, K);
    return out;
}

// coefficients of (1-z)^alpha: c_k = (-1)^k alpha (alpha-1) ... (alpha-k+1)/k!
inline std::vector<double> binomial_pow_coeffs(double alpha, std::size_t K) {
    std::vector<double> c(K + 1, 0.0);
    c[0] = 1.0;
    for (std::size_t k = 1; k <= K; ++k)
        c[k] = -c[k - 1] * (alpha - static_cast<double>(k) + 1.0) / static_cast<double>(k);
    return c;
}

// e^{-x} x^k / k! evaluated in log space (valid for any x > 0)
inline std::vector<double> poisson_logspace(double x, std::size_t K) {
    std::vector<double> p(K + 1, 0.0);
    for (std::size_t k = 0; k <= K; ++k)
        p[k] = std::exp(static_cast<double>(k) * std::log(x) - x -
                        std::lgamma(static_cast<double>(k) + 1.0));
    return p;
}

// Wilson-Hilferty upper quantile of chi-square; z = 3.0902 is the standard
// normal 0.999 quantile, so this rejects a correct sampler ~1/1000 runs
// (seeds are fixed, so a passing seed stays passing).
inline double chi2_upper_quantile(double dof, double z = 3.0902) {
    const double a = 2.0 / (9.0 * dof);
    const double t = 1.0 - a + z * std::sqrt(a);
    return dof * t * t * t;
}

// direct band sum for an atom measure: sum_n w f(pos m^{-n}) (pos m^{-n})^{-alpha},
// bands swept symmetrically far beyond double underflow
template <class F>
double atom_band_sum(double m, double pos, double w, double alpha, F&& f, int n_max = 2000) {
    double acc = 0.0;
    for (int n = -n_max; n <= n_max; ++n) {
        const double x = pos * std::pow(m, -n);
        if (!std::isfinite(x) || x <= 0.0) continue;
        const double term = w * f(x) * std::pow(x, -alpha);
        if (std::isfinite(term)) acc += term;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// geometric(b = 1/4) offspring: the linear-fractional family with everything
// in closed form. m = 1/3; the conditioned limit law is geometric with ratio
// m; survival probabilities satisfy 1/p_{n+1} = 3/p_n + 1.
// ---------------------------------------------------------------------------

inline double geo_m() { return 1.0 / 3.0; }

inline double geo_nu_min(std::size_t k) {
    return (2.0 / 3.0) * std::pow(1.0 / 3.0, static_cast<double>(k) - 1.0);
}

inline double geo_H(double z) { return 2.0 * z / (3.0 - z); }

inline double geo_p_n(int n) { return 2.0 / (std::pow(3.0, n + 1) - 1.0); }

} // namespace oracle
