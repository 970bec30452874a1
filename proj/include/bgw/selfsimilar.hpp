#pragma once

// Measures L on (0,infty) with the scaling invariance L(A) = L(mA), stored on
// the fundamental domain [1, 1/m), and quadrature of integrals
//
//     I(f) = int_0^infty f(x) x^{-alpha} L(dx)
//          = sum_{n in Z} int_{[1,1/m)} f(m^{-n} y) (m^{-n} y)^{-alpha} L0(dy).
//
// In the log coordinate u = log x the measure is periodic with period
// log(1/m): one band carries an optional multiple of du (the dx/x part), a
// piecewise-constant density over a uniform partition of the band, and atoms.
// Per-band integrals use Gauss-Legendre in u (atoms evaluated exactly); the
// band sum is truncated adaptively, stopping a side only after two
// consecutive bands fall below the threshold, so single small bands from
// oscillation cannot end the sum early. A side whose contributions fail to
// decay by at least 0.1% per band for 64 consecutive bands is declared
// divergent (alpha >= 1 misuse, or an integrand outside the caller contract).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace bgw {

struct self_similar_measure {
    double m = 0.5;
    double log_uniform_weight = 0.0;             // c in  c * dx/x
    std::vector<std::pair<double, double>> atoms; // (position in [1,1/m), weight > 0)
    std::vector<double> density_cells;            // g(u) on a uniform partition of [0, L)

    double band_length() const noexcept { return std::log(1.0 / m); }

    static self_similar_measure log_uniform(double m, double c) {
        self_similar_measure lam;
        lam.m = m;
        lam.log_uniform_weight = c;
        lam.validate();
        return lam;
    }

    // Atom positions anywhere in (0,infty); folded into [1, 1/m) (the weight
    // is band-independent by self-similarity, so folding is exact).
    static self_similar_measure from_atoms(double m,
                                           std::vector<std::pair<double, double>> atoms) {
        self_similar_measure lam;
        lam.m = m;
        lam.atoms = std::move(atoms);
        lam.validate(); // checks m before folding needs it
        for (auto& [x, w] : lam.atoms) x = lam.fold(x);
        return lam;
    }

    static self_similar_measure from_log_density(double m, std::vector<double> cells) {
        self_similar_measure lam;
        lam.m = m;
        lam.density_cells = std::move(cells);
        lam.validate();
        return lam;
    }

    void validate() const {
        if (!std::isfinite(m) || !(m > 0.0) || m >= 1.0)
            throw invalid_measure("self-similar measure: ratio m must lie in (0,1)");
        if (!std::isfinite(log_uniform_weight) || log_uniform_weight < 0.0)
            throw invalid_measure("self-similar measure: log-uniform weight must be >= 0");
        for (const auto& [x, w] : atoms) {
            if (!std::isfinite(x) || !(x > 0.0))
                throw invalid_measure("self-similar measure: atom position must be > 0");
            if (!std::isfinite(w) || !(w > 0.0))
                throw invalid_measure("self-similar measure: atom weight must be > 0");
        }
        for (double g : density_cells)
            if (!std::isfinite(g) || g < 0.0)
                throw invalid_measure("self-similar measure: density cells must be >= 0");
    }

    double fold(double x) const {
        const double L = band_length();
        double y = x * std::pow(m, std::floor(std::log(x) / L));
        while (y < 1.0) y /= m;
        while (y >= 1.0 / m) y *= m;
        return y;
    }

    // L([1, 1/m)) = L([m, 1)); zero only for the zero measure.
    double fundamental_mass() const noexcept {
        const double L = band_length();
        double mass = log_uniform_weight * L;
        for (const auto& [x, w] : atoms) mass += w;
        if (!density_cells.empty()) {
            double cellsum = 0.0;
            for (double g : density_cells) cellsum += g;
            mass += cellsum * L / static_cast<double>(density_cells.size());
        }
        return mass;
    }

    bool is_zero() const noexcept { return fundamental_mass() == 0.0; }

    self_similar_measure scaled(double s) const {
        if (!std::isfinite(s) || s < 0.0)
            throw invalid_measure("self-similar measure: scale factor must be >= 0");
        self_similar_measure out = *this;
        out.log_uniform_weight *= s;
        for (auto& [x, w] : out.atoms) w *= s;
        for (double& g : out.density_cells) g *= s;
        return out;
    }

    // Density value (relative to du) at u in [0, L): c + piecewise cell.
    double log_density_at(double u) const noexcept {
        double g = log_uniform_weight;
        if (!density_cells.empty()) {
            const double L = band_length();
            auto idx = static_cast<std::size_t>(u / L * static_cast<double>(density_cells.size()));
            idx = std::min(idx, density_cells.size() - 1);
            g += density_cells[idx];
        }
        return g;
    }
};

struct integral_result {
    double value = 0.0;
    long band_lo = 0, band_hi = 0; // bands actually summed: x in [m^{-lo}, m^{-hi-1})
    double tail_estimate = 0.0;
};

struct vector_integral_result {
    std::vector<double> values;
    long band_lo = 0, band_hi = 0;
    double tail_estimate = 0.0;
};

struct integrate_options {
    int gl_order = 32;
    int panels_per_band = 0;      // 0: auto from the component count
    int min_bands_left = 4;       // explore at least this many bands per side
    int min_bands_right = 4;
    long max_bands_per_side = 50000;
    int diverge_fail_limit = 64;
};

namespace detail {

// Quadrature/atom sites of one fundamental band, with x = y * m^{-n} and a
// band-independent coefficient (GL weight * density * y^{-alpha}, or
// atom weight * y^{-alpha}).
struct band_site {
    double y;
    double coeff;
};

inline std::vector<band_site> make_band_sites(const self_similar_measure& lam, double alpha,
                                              const integrate_options& opt, int panels) {
    std::vector<band_site> sites;
    const double L = lam.band_length();
    const bool has_continuous = lam.log_uniform_weight > 0.0 ||
        std::any_of(lam.density_cells.begin(), lam.density_cells.end(),
                    [](double g) { return g > 0.0; });
    if (has_continuous) {
        const gl_rule& rule = gauss_legendre(opt.gl_order);
        const double width = L / panels;
        sites.reserve(static_cast<std::size_t>(panels) * rule.x.size() + lam.atoms.size());
        for (int p = 0; p < panels; ++p) {
            const double mid = (p + 0.5) * width, half = 0.5 * width;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double u = mid + half * rule.x[i];
                const double y = std::exp(u);
                const double dens = lam.log_density_at(u);
                if (dens == 0.0) continue;
                sites.push_back({y, rule.w[i] * half * dens * std::pow(y, -alpha)});
            }
        }
    }
    for (const auto& [x, w] : lam.atoms) sites.push_back({x, w * std::pow(x, -alpha)});
    return sites;
}

} // namespace detail

// Vector-valued band integration: fill(x, out) writes the n_out integrand
// components at x into a zeroed buffer. Components are resolved to relative
// accuracy rel_tol against their own partial sums, so coefficients spanning
// many orders of magnitude all come out fully resolved.
template <class Fill>
vector_integral_result integrate_selfsimilar_vec(const self_similar_measure& lam, double alpha,
                                                 std::size_t n_out, Fill&& fill, double rel_tol,
                                                 integrate_options opt = {}) {
    lam.validate();
    if (!std::isfinite(alpha)) throw non_finite_input("integrate: non-finite alpha");
    if (!(rel_tol > 0.0)) throw invalid_config("integrate: rel_tol must be > 0");

    const int panels = opt.panels_per_band > 0
        ? opt.panels_per_band
        : std::max(1, static_cast<int>(std::ceil(
              lam.band_length() * std::sqrt(static_cast<double>(n_out)) / 16.0)));
    const std::vector<detail::band_site> sites = detail::make_band_sites(lam, alpha, opt, panels);

    vector_integral_result res;
    res.values.assign(n_out, 0.0);
    if (sites.empty()) return res; // zero measure

    std::vector<double> buf(n_out, 0.0), contrib(n_out, 0.0);
    const double band_thr = 0.25 * rel_tol;

    // Evaluates band n into `contrib`; returns max_k |contrib_k| / |partial_k|,
    // or -1 when the band scaling m^{-n} / m^{alpha n} is no longer
    // representable in double precision (the caller decides whether that is
    // a negligible far tail or an unresolved divergence).
    const auto eval_band = [&](long n) -> double {
        std::fill(contrib.begin(), contrib.end(), 0.0);
        const double band_pow = std::pow(lam.m, alpha * static_cast<double>(n));
        const double scale_x = std::pow(lam.m, -static_cast<double>(n));
        if (!std::isfinite(scale_x) || !std::isfinite(band_pow)) return -1.0;
        for (const auto& site : sites) {
            const double c = site.coeff * band_pow;
            if (c == 0.0) continue;
            std::fill(buf.begin(), buf.end(), 0.0);
            fill(site.y * scale_x, buf);
            for (std::size_t k = 0; k < n_out; ++k) contrib[k] += c * buf[k];
        }
        double r = 0.0;
        for (std::size_t k = 0; k < n_out; ++k) {
            if (!std::isfinite(contrib[k]))
                throw band_sum_diverging("non-finite contribution in band " + std::to_string(n));
            res.values[k] += contrib[k];
            const double scale = std::abs(res.values[k]);
            const double a = std::abs(contrib[k]);
            if (a > 0.0) r = std::max(r, scale > 0.0 ? a / scale : 1.0);
        }
        return r;
    };

    eval_band(0);
    for (int side = 0; side < 2; ++side) {
        const bool right = side == 0;
        const long min_bands = right ? opt.min_bands_right : opt.min_bands_left;
        int below = 0, fails = 0;
        double prev_r = std::numeric_limits<double>::infinity();
        double tail0 = 0.0, tail1 = 0.0;
        long n = 0;
        for (long step = 1; ; ++step) {
            n = right ? step : -step;
            const double r = eval_band(n);
            if (r < 0.0) {
                // Band scaling overflowed. If contributions were already
                // below threshold the remaining tail is negligible; if not,
                // the sum cannot be resolved in double precision.
                if (below == 0)
                    throw band_sum_diverging(
                        "band scaling overflow before convergence on the " +
                        std::string(right ? "large-x" : "small-x") + " side");
                n = right ? step - 1 : -(step - 1);
                break;
            }
            tail0 = tail1;
            double amax = 0.0;
            for (double c : contrib) amax = std::max(amax, std::abs(c));
            tail1 = amax;
            if (r <= band_thr) {
                fails = 0;
                if (++below >= 2 && step >= min_bands) break;
            } else {
                below = 0;
                if (r >= 0.999 * prev_r) {
                    if (++fails >= opt.diverge_fail_limit)
                        throw band_sum_diverging(
                            "band contributions not decaying on the " +
                            std::string(right ? "large-x" : "small-x") +
                            " side (64 consecutive bands); alpha >= 1 misuse?");
                } else {
                    fails = 0;
                }
            }
            prev_r = r;
            if (step >= opt.max_bands_per_side)
                throw band_sum_diverging("band sum not converged after " +
                                         std::to_string(step) + " bands per side");
        }
        res.tail_estimate += tail0 + tail1;
        if (right)
            res.band_hi = n;
        else
            res.band_lo = n;
    }
    return res;
}

// Scalar integrand wrapper.
template <class F>
integral_result integrate_selfsimilar(const self_similar_measure& lam, double alpha, F&& f,
                                      double rel_tol, integrate_options opt = {}) {
    auto vec = integrate_selfsimilar_vec(
        lam, alpha, 1,
        [&](double x, std::vector<double>& out) { out[0] = f(x); }, rel_tol, opt);
    return integral_result{vec.values[0], vec.band_lo, vec.band_hi, vec.tail_estimate};
}

// ---------------------------------------------------------------------------
// reference integral and QSD normalization
// ---------------------------------------------------------------------------

// e^{-a x} - e^{-x} without cancellation at small x.
inline double exp_difference(double a, double x) noexcept {
    const double t = (1.0 - a) * x;
    if (t < 30.0) return std::exp(-x) * std::expm1(t);
    return std::exp(-a * x) - std::exp(-x); // e^{-x} negligible vs e^{-ax}
}

struct gamma_check_result {
    double numeric = 0.0;
    double closed_form = 0.0;
    double rel_error = 0.0;
};

// int_0^infty (e^{-ax} - e^{-x}) x^{-alpha} dx/x against the closed form
// Gamma(-alpha)(a^alpha - 1) (alpha != 0) or -log a (alpha = 0). The measure
// dx/x is self-similar for every ratio; the band decomposition uses m = 1/2.
inline gamma_check_result gamma_integral_check(double a, double alpha, double rel_tol = 1e-10) {
    if (!std::isfinite(a) || !(a > 0.0) || a > 1.0)
        throw invalid_config("gamma_integral_check: a must lie in (0,1]");
    if (!(alpha < 1.0))
        throw out_of_range_alpha("gamma_integral_check: requires alpha < 1");
    gamma_check_result out;
    if (a == 1.0) return out; // integrand vanishes identically
    const self_similar_measure lam = self_similar_measure::log_uniform(0.5, 1.0);
    out.numeric =
        integrate_selfsimilar(lam, alpha, [a](double x) { return exp_difference(a, x); },
                              rel_tol)
            .value;
    out.closed_form = alpha == 0.0 ? -std::log(a)
                                   : std::tgamma(-alpha) * (std::pow(a, alpha) - 1.0);
    out.rel_error = out.closed_form != 0.0
        ? std::abs(out.numeric - out.closed_form) / std::abs(out.closed_form)
        : std::abs(out.numeric);
    return out;
}

// int (1 - e^{-x}) x^{-alpha} L(dx); finite iff 0 < alpha < 1.
inline double qsd_normalization_integral(const self_similar_measure& lam, double alpha,
                                         double rel_tol = 1e-10) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw out_of_range_alpha("QSD normalization needs alpha in (0,1); got " +
                                 std::to_string(alpha));
    return integrate_selfsimilar(lam, alpha, [](double x) { return -std::expm1(-x); },
                                 rel_tol)
        .value;
}

// Scales L so that int (1-e^{-x}) x^{-alpha} L(dx) = 1 (QSD condition).
inline self_similar_measure normalize_for_qsd(const self_similar_measure& lam, double alpha,
                                              double rel_tol = 1e-10) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw out_of_range_alpha("normalize_for_qsd needs alpha in (0,1); got " +
                                 std::to_string(alpha));
    if (lam.is_zero()) throw zero_mass("normalize_for_qsd: zero measure");
    const double total = qsd_normalization_integral(lam, alpha, rel_tol);
    return lam.scaled(1.0 / total);
}

} // namespace bgw
