#pragma once

// Dense truncated power series over double — the substrate for all
// generating-function work. A truncated_series is immutable after
// construction; every operation returns a fresh value truncated to
// min(order(a), order(b)) unless an explicit output order is requested.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bgw {

class truncated_series {
public:
    // Zero series of the given order.
    explicit truncated_series(std::size_t order) : c_(order + 1, 0.0) {}

    // Adopts `coeffs` as a_0..a_K; order = size - 1. Rejects NaN/inf.
    explicit truncated_series(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) c_.push_back(0.0);
        for (double v : c_)
            if (!std::isfinite(v))
                throw non_finite_input("truncated_series: non-finite coefficient");
    }

    static truncated_series constant(double a0, std::size_t order) {
        std::vector<double> c(order + 1, 0.0);
        c[0] = a0;
        return truncated_series(std::move(c));
    }

    // The series z (requires order >= 1 to hold the linear coefficient).
    static truncated_series identity(std::size_t order) {
        std::vector<double> c(std::max<std::size_t>(order, 1) + 1, 0.0);
        c[1] = 1.0;
        return truncated_series(std::move(c));
    }

    std::size_t order() const noexcept { return c_.size() - 1; }

    // Coefficient access; indices beyond the order read as 0.
    double operator[](std::size_t k) const noexcept { return k < c_.size() ? c_[k] : 0.0; }

    const std::vector<double>& coeffs() const noexcept { return c_; }

    // Horner evaluation at a scalar point.
    double eval(double z) const noexcept {
        double acc = 0.0;
        for (std::size_t k = c_.size(); k-- > 0;) acc = acc * z + c_[k];
        return acc;
    }

    double sum() const noexcept { // eval(1) without cancellation surprises
        double acc = 0.0;
        for (double v : c_) acc += v;
        return acc;
    }

private:
    std::vector<double> c_;
};

enum class compose_mode { polynomial_outer, formal };

// ---------------------------------------------------------------------------
// arithmetic
// ---------------------------------------------------------------------------

inline truncated_series add(const truncated_series& a, const truncated_series& b) {
    const std::size_t n = std::min(a.order(), b.order());
    std::vector<double> c(n + 1);
    for (std::size_t k = 0; k <= n; ++k) c[k] = a[k] + b[k];
    return truncated_series(std::move(c));
}

inline truncated_series sub(const truncated_series& a, const truncated_series& b) {
    const std::size_t n = std::min(a.order(), b.order());
    std::vector<double> c(n + 1);
    for (std::size_t k = 0; k <= n; ++k) c[k] = a[k] - b[k];
    return truncated_series(std::move(c));
}

inline truncated_series scale(const truncated_series& a, double s) {
    if (!std::isfinite(s)) throw non_finite_input("scale: non-finite scalar");
    std::vector<double> c(a.coeffs());
    for (double& v : c) v *= s;
    return truncated_series(std::move(c));
}

// Cauchy product truncated to `out_order`.
inline truncated_series mul(const truncated_series& a, const truncated_series& b,
                            std::size_t out_order) {
    std::vector<double> c(out_order + 1, 0.0);
    const std::size_t na = std::min(a.order(), out_order);
    for (std::size_t i = 0; i <= na; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        const std::size_t nb = std::min(b.order(), out_order - i);
        for (std::size_t j = 0; j <= nb; ++j) c[i + j] += ai * b[j];
    }
    return truncated_series(std::move(c));
}

inline truncated_series mul(const truncated_series& a, const truncated_series& b) {
    return mul(a, b, std::min(a.order(), b.order()));
}

inline truncated_series operator+(const truncated_series& a, const truncated_series& b) { return add(a, b); }
inline truncated_series operator-(const truncated_series& a, const truncated_series& b) { return sub(a, b); }
inline truncated_series operator*(const truncated_series& a, const truncated_series& b) { return mul(a, b); }
inline truncated_series operator*(const truncated_series& a, double s) { return scale(a, s); }
inline truncated_series operator*(double s, const truncated_series& a) { return scale(a, s); }

// Re-truncation; extending pads with zero coefficients.
inline truncated_series truncate(const truncated_series& a, std::size_t order) {
    std::vector<double> c(order + 1, 0.0);
    const std::size_t n = std::min(order, a.order());
    for (std::size_t k = 0; k <= n; ++k) c[k] = a[k];
    return truncated_series(std::move(c));
}

inline truncated_series derivative(const truncated_series& a) {
    const std::size_t n = a.order();
    std::vector<double> c(n == 0 ? 1 : n, 0.0);
    for (std::size_t k = 1; k <= n; ++k) c[k - 1] = static_cast<double>(k) * a[k];
    return truncated_series(std::move(c));
}

// ---------------------------------------------------------------------------
// composition
// ---------------------------------------------------------------------------

// outer(inner) truncated to `out_order`, by Horner over outer's coefficients.
//
// mode polynomial_outer: outer is an exact polynomial of degree outer.order()
//   (coefficients beyond the stored ones are structurally absent, not merely
//   small); inner may have any constant term, and the result is exact in the
//   inner coefficients. This is the F_n iteration case.
// mode formal: outer may be a genuine truncation, so inner(0) must vanish;
//   otherwise the missing outer tail would contribute at every output order.
//
// Both modes run the identical Horner loop, so they agree bitwise whenever
// both preconditions hold.
inline truncated_series compose(const truncated_series& outer, const truncated_series& inner,
                                compose_mode mode, std::size_t out_order) {
    if (mode == compose_mode::formal && inner[0] != 0.0)
        throw formal_composition_requires_zero_constant(
            "series compose: formal mode requires inner constant term 0, got " +
            std::to_string(inner[0]));
    truncated_series acc = truncated_series::constant(outer[outer.order()], out_order);
    for (std::size_t k = outer.order(); k-- > 0;) {
        acc = mul(acc, inner, out_order);
        acc = add(acc, truncated_series::constant(outer[k], out_order));
    }
    return acc;
}

inline truncated_series compose(const truncated_series& outer, const truncated_series& inner,
                                compose_mode mode) {
    return compose(outer, inner, mode, inner.order());
}

// ---------------------------------------------------------------------------
// elementary functions
// ---------------------------------------------------------------------------
// Standard power-series recursions. The inner sums loop over the support of
// the input rather than scanning every order, so a sparse argument (e.g.
// 1 - z at order 4e6) costs O(K nnz) instead of O(K^2). Term order matches
// the naive ascending-j loop, so dense inputs give bitwise identical output.

namespace detail {

inline std::vector<std::size_t> support_indices(const truncated_series& a) {
    std::vector<std::size_t> nz;
    for (std::size_t j = 1; j <= a.order(); ++j)
        if (a[j] != 0.0) nz.push_back(j);
    return nz;
}

} // namespace detail

// exp(a); any constant term, handled by factoring e^{a_0}.
inline truncated_series series_exp(const truncated_series& a) {
    const std::size_t n = a.order();
    const double e0 = std::exp(a[0]);
    if (!std::isfinite(e0))
        throw non_finite_input("series_exp: exp of constant term overflows");
    const std::vector<std::size_t> nz = detail::support_indices(a);
    std::vector<double> b(n + 1, 0.0);
    b[0] = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double s = 0.0;
        for (std::size_t j : nz) {
            if (j > k) break;
            s += static_cast<double>(j) * a[j] * b[k - j];
        }
        b[k] = s / static_cast<double>(k);
    }
    for (double& v : b) v *= e0;
    return truncated_series(std::move(b));
}

// log(a); requires a_0 > 0.
inline truncated_series series_log(const truncated_series& a) {
    if (!(a[0] > 0.0))
        throw non_positive_constant_term("series_log: constant term must be > 0");
    const std::size_t n = a.order();
    const std::vector<std::size_t> nz = detail::support_indices(a);
    std::vector<double> b(n + 1, 0.0);
    b[0] = std::log(a[0]);
    const double inv0 = 1.0 / a[0];
    for (std::size_t k = 1; k <= n; ++k) {
        double s = static_cast<double>(k) * a[k];
        // The naive loop runs j = 1..k-1 ascending with terms keyed by
        // a[k - j]; walking the support descending keeps that term order.
        for (std::size_t idx = nz.size(); idx-- > 0;) {
            const std::size_t i = nz[idx];
            if (i >= k) continue;
            s -= static_cast<double>(k - i) * b[k - i] * a[i];
        }
        b[k] = s * inv0 / static_cast<double>(k);
    }
    return truncated_series(std::move(b));
}

// a^alpha; requires a_0 > 0. Miller recurrence:
//   k a_0 b_k = sum_{j=1..k} ((alpha+1) j - k) a_j b_{k-j}.
inline truncated_series series_pow(const truncated_series& a, double alpha) {
    if (!(a[0] > 0.0))
        throw non_positive_constant_term("series_pow: constant term must be > 0");
    if (!std::isfinite(alpha)) throw non_finite_input("series_pow: non-finite exponent");
    const std::size_t n = a.order();
    const std::vector<std::size_t> nz = detail::support_indices(a);
    std::vector<double> b(n + 1, 0.0);
    b[0] = std::pow(a[0], alpha);
    const double inv0 = 1.0 / a[0];
    for (std::size_t k = 1; k <= n; ++k) {
        double s = 0.0;
        const double dk = static_cast<double>(k);
        for (std::size_t j : nz) {
            if (j > k) break;
            s += ((alpha + 1.0) * static_cast<double>(j) - dk) * a[j] * b[k - j];
        }
        b[k] = s * inv0 / dk;
    }
    return truncated_series(std::move(b));
}

} // namespace bgw
