#pragma once

// Independent checks applied to constructed measures: the generating-function
// functional equation, the eigenvector equation nu P = lambda nu on a
// truncated kernel, asymptotic recovery of x^{-alpha} Lambda(dx) from nu,
// the Hoppe-function roundtrip for QSDs, conversion between measures on the
// unit interval and self-similar measures (pushforward by t -> m^{-t}), and
// the partial sums of the recurrence criterion for the Q-process.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "branching.hpp"
#include "construct.hpp"
#include "errors.hpp"
#include "quadrature.hpp"
#include "selfsimilar.hpp"
#include "series.hpp"
#include "yaglom.hpp"

namespace bgw {

struct verification_report {
    std::string check_name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::vector<double> details;          // per grid point or per row
    std::map<std::string, double> extras; // named diagnostics

    void finish() noexcept { passed = residual <= tolerance; }
};

// ---------------------------------------------------------------------------
// functional equation  G(F(z)) - G(F(0)) = lambda G(z)
// ---------------------------------------------------------------------------

// For killed-process measures; true measures (includes_zero) satisfy the
// non-subtracted variant G(F(z)) = lambda G(z). G is evaluated by Horner
// from the stored coefficients; the extras report a geometric-tail bound on
// what the dropped coefficients could contribute at the largest grid point.
inline verification_report functional_equation_residual(const invariant_measure& nu,
                                                        const offspring_distribution& dist,
                                                        double lambda,
                                                        const std::vector<double>& zgrid,
                                                        double tolerance = 1e-8) {
    if (zgrid.empty()) throw invalid_config("functional_equation_residual: empty grid");
    double z_max = 0.0;
    for (double z : zgrid) {
        if (!(z > 0.0) || z > 0.95)
            throw invalid_config("functional_equation_residual: grid must lie in (0, 0.95]");
        z_max = std::max(z_max, z);
    }

    verification_report rep;
    rep.check_name = "functional_equation";
    rep.tolerance = tolerance;
    const double gf0 = nu.includes_zero ? 0.0 : nu.eval_pgf(dist.pgf(0.0));
    for (double z : zgrid) {
        const double lhs = nu.eval_pgf(dist.pgf(z)) - gf0;
        const double r = std::abs(lhs - lambda * nu.eval_pgf(z));
        rep.details.push_back(r);
        rep.residual = std::max(rep.residual, r);
    }
    // |sum_{k>K} nu(k) z^k| <= nu(K) z^{K+1}/(1-z) for a non-increasing tail
    const std::size_t K = nu.K();
    rep.extras["truncation_leak"] =
        nu.nu.back() * std::pow(z_max, static_cast<double>(K) + 1.0) / (1.0 - z_max);
    rep.finish();
    return rep;
}

// ---------------------------------------------------------------------------
// eigenvector equation  nu P = lambda nu
// ---------------------------------------------------------------------------

// L1 residual of (nu P)(j) - lambda nu(j) over j <= K_report, with the sum
// over i truncated at K. K_report <= K/2 keeps kernel truncation out of the
// reported rows; the unavoidable leakage sum_i nu(i) * row_deficit(i) is
// reported in extras. For true measures row/column 0 joins the system with
// P(i,0) = F(0)^i and the absorbing row P(0,0) = 1.
inline verification_report eigen_residual(const invariant_measure& nu,
                                          const offspring_distribution& dist, double lambda,
                                          std::size_t K, std::size_t K_report,
                                          double tolerance = 1e-6) {
    if (K_report < 1 || K_report > K / 2)
        throw invalid_config("eigen_residual: need 1 <= K_report <= K/2");
    if (K > nu.K())
        throw invalid_config("eigen_residual: measure truncated below requested K");

    const transition_block blk = build_transition_block(dist, K);

    verification_report rep;
    rep.check_name = "eigen";
    rep.tolerance = tolerance;

    std::vector<double> nu_p(K_report + 1, 0.0);
    for (std::size_t i = 1; i <= K; ++i) {
        const double w = nu.nu[i];
        if (w == 0.0) continue;
        const double* row = blk.entries.data() + (i - 1) * K;
        for (std::size_t j = 1; j <= K_report; ++j) nu_p[j] += w * row[j - 1];
    }

    double err = 0.0, mass = 0.0, leakage = 0.0;
    for (std::size_t i = 1; i <= K; ++i) leakage += nu.nu[i] * blk.deficit[i - 1];
    if (nu.includes_zero) {
        nu_p[0] = nu.nu[0]; // absorbing state
        for (std::size_t i = 1; i <= K; ++i) nu_p[0] += nu.nu[i] * blk.zero_mass[i - 1];
        const double r = std::abs(nu_p[0] - lambda * nu.nu[0]);
        rep.details.push_back(r);
        err += r;
        mass += nu.nu[0];
    }
    for (std::size_t j = 1; j <= K_report; ++j) {
        const double r = std::abs(nu_p[j] - lambda * nu.nu[j]);
        rep.details.push_back(r);
        err += r;
        mass += nu.nu[j];
    }
    rep.residual = err / std::max(1.0, mass);
    rep.extras["leakage"] = leakage;
    rep.extras["reported_mass"] = mass;
    rep.finish();
    return rep;
}

// ---------------------------------------------------------------------------
// recovery of x^{-alpha} Lambda(dx) from nu (vague-limit diagnostic)
// ---------------------------------------------------------------------------

struct log_bin_spec {
    double x_lo = 0.25;
    double x_hi = 4.0;
    std::size_t count = 16; // equal width in log x
};

struct recovered_measure {
    std::vector<double> bin_mass;  // mu_n(bin), bins equal in log x
    std::vector<double> bin_edges; // count+1 edges
    double p_n = 1.0;
    std::size_t lattice_points = 0;
    int n = 0;
};

// mu_n(A) = m^{-alpha n} nu(p_n^{-1} A), binned: rescaling nu by the survival
// probability p_n exposes x^{-alpha} Lambda(dx) as n grows.
inline recovered_measure recover_lambda(const invariant_measure& nu,
                                        const offspring_distribution& dist, int n,
                                        const log_bin_spec& bins) {
    if (n < 0) throw invalid_config("recover_lambda: n must be >= 0");
    if (!(bins.x_lo > 0.0) || !(bins.x_hi > bins.x_lo) || bins.count < 1)
        throw invalid_config("recover_lambda: need 0 < x_lo < x_hi and count >= 1");

    recovered_measure out;
    out.n = n;
    double p = 1.0;
    for (int k = 0; k < n; ++k) p *= dist.survival_ratio(p);
    out.p_n = p;

    const double llo = std::log(bins.x_lo), lhi = std::log(bins.x_hi);
    const double width = (lhi - llo) / static_cast<double>(bins.count);
    out.bin_edges.resize(bins.count + 1);
    for (std::size_t b = 0; b <= bins.count; ++b)
        out.bin_edges[b] = std::exp(llo + width * static_cast<double>(b));

    out.bin_mass.assign(bins.count, 0.0);
    const double scale = std::pow(dist.mean(), -nu.alpha * static_cast<double>(n));
    for (std::size_t k = 1; k <= nu.K(); ++k) {
        const double x = p * static_cast<double>(k);
        if (x < bins.x_lo || x >= bins.x_hi) continue;
        ++out.lattice_points;
        auto b = static_cast<std::size_t>((std::log(x) - llo) / width);
        b = std::min(b, bins.count - 1);
        out.bin_mass[b] += scale * nu.nu[k];
    }
    if (out.lattice_points < 10)
        throw insufficient_support("recover_lambda: only " +
                                   std::to_string(out.lattice_points) +
                                   " lattice points p_n*k fall in the window");
    return out;
}

// ---------------------------------------------------------------------------
// Hoppe function  Q = log(1-H)/log m  and the QSD roundtrip
// ---------------------------------------------------------------------------

struct hoppe_q {
    truncated_series Q = truncated_series::constant(0.0, 1); // Q(0) = 0
};

inline hoppe_q compute_hoppe_q(const yaglom_result& yag, const offspring_distribution& dist) {
    const std::size_t K = yag.H.order();
    std::vector<double> u(K + 1, 0.0);
    u[0] = 1.0;
    for (std::size_t k = 1; k <= K; ++k) u[k] = -yag.H[k];
    return {scale(series_log(truncated_series(std::move(u))), 1.0 / std::log(dist.mean()))};
}

namespace detail {

// 1 - H(w) = deficit + (1-w) sum_j r_j w^j with r_j = sum_{k>j} nu_min(k):
// nonnegative terms only, no cancellation as H(w) -> 1.
struct one_minus_h {
    std::vector<double> r;
    double deficit = 0.0;

    explicit one_minus_h(const yaglom_result& yag) {
        const std::size_t K = yag.H.order();
        r.assign(K, 0.0);
        double acc = 0.0;
        for (std::size_t j = K; j-- > 0;) {
            acc += yag.H[j + 1];
            r[j] = acc; // nu(j+1) + ... + nu(K)
        }
        deficit = 1.0 - (K >= 1 ? r[0] : 0.0);
    }

    double operator()(double w) const noexcept {
        double s = 0.0;
        for (std::size_t j = r.size(); j-- > 0;) s = s * w + r[j];
        return deficit + (1.0 - w) * s;
    }
};

} // namespace detail

// G_alpha(z) = alpha * int_0^z H'(w) (1-H(w))^{alpha-1} dw compared against
// 1 - (1-H(z))^alpha, and the inverse map Q_back = log(1-G_alpha)/(alpha log m)
// compared against Q itself. extras also carry the residual of
// Q(F(z)) = 1 + Q(z) evaluated pointwise.
inline verification_report hoppe_roundtrip(const offspring_distribution& dist, double alpha,
                                           std::size_t K, const std::vector<double>& zgrid,
                                           double tolerance = 1e-8) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw out_of_range_alpha("hoppe_roundtrip: requires alpha in (0,1)");
    for (double z : zgrid)
        if (!(z > 0.0) || z > 0.95)
            throw invalid_config("hoppe_roundtrip: grid must lie in (0, 0.95]");

    const yaglom_result yag = yaglom_limit(dist, K);
    const detail::one_minus_h omh(yag);
    const truncated_series h_prime = derivative(yag.H);
    const double logm = std::log(dist.mean());

    verification_report rep;
    rep.check_name = "hoppe_roundtrip";
    rep.tolerance = tolerance;

    double r1 = 0.0, r2 = 0.0, rq = 0.0;
    tanh_sinh_options tso;
    tso.rel_tol = 1e-11;
    for (double z : zgrid) {
        const double g_ref = 1.0 - std::pow(omh(z), alpha);
        const double g_num = alpha *
            tanh_sinh([&](double w, double) { return h_prime.eval(w) *
                                                     std::pow(omh(w), alpha - 1.0); },
                      0.0, z, tso);
        r1 = std::max(r1, std::abs(g_num - g_ref));

        const double q_direct = std::log(omh(z)) / logm;
        const double q_back = std::log1p(-g_num) / (alpha * logm);
        r2 = std::max(r2, std::abs(q_back - q_direct));

        const double q_shift = std::log(omh(dist.pgf(z))) / logm;
        rq = std::max(rq, std::abs(q_shift - 1.0 - q_direct));
    }
    rep.extras["integral_vs_closed_form"] = r1;
    rep.extras["q_roundtrip"] = r2;
    rep.extras["q_equation"] = rq;
    rep.residual = std::max(r1, r2);
    rep.details = {r1, r2, rq};
    rep.finish();
    return rep;
}

// ---------------------------------------------------------------------------
// conversion between measures on [0,1) and self-similar measures
// ---------------------------------------------------------------------------

// A finite measure on [0,1): atoms plus a piecewise-constant density on a
// uniform partition.
struct unit_interval_measure {
    std::vector<std::pair<double, double>> atoms; // (t in [0,1), weight > 0)
    std::vector<double> density_cells;

    double total_mass() const noexcept {
        double s = 0.0;
        for (const auto& [t, w] : atoms) s += w;
        if (!density_cells.empty()) {
            double c = 0.0;
            for (double g : density_cells) c += g;
            s += c / static_cast<double>(density_cells.size());
        }
        return s;
    }
};

// Pushforward of c*mu by t -> m^{-t}: the fundamental block of a
// self-similar measure. Uniform mu with c = log(1/m) gives dx/x.
inline self_similar_measure ks_forward(const unit_interval_measure& mu, double c, double m) {
    if (!std::isfinite(c) || c < 0.0) throw invalid_measure("ks_forward: c must be >= 0");
    self_similar_measure lam;
    lam.m = m;
    const double L = lam.band_length();
    for (const auto& [t, w] : mu.atoms) {
        if (!(t >= 0.0) || t >= 1.0)
            throw invalid_measure("ks_forward: atom positions must lie in [0,1)");
        if (!(w > 0.0)) throw invalid_measure("ks_forward: atom weights must be > 0");
        lam.atoms.emplace_back(std::pow(m, -t), c * w);
    }
    lam.density_cells.reserve(mu.density_cells.size());
    for (double g : mu.density_cells) {
        if (!(g >= 0.0)) throw invalid_measure("ks_forward: density must be >= 0");
        lam.density_cells.push_back(c * g / L); // dt = du / L
    }
    lam.validate();
    return lam;
}

// Inverse: pull the fundamental block back by x -> log x / log(1/m) and
// split into total mass c and a normalized mu. The dx/x component becomes a
// constant density.
inline std::pair<unit_interval_measure, double> ks_inverse(const self_similar_measure& lam) {
    lam.validate();
    const double c = lam.fundamental_mass();
    if (c == 0.0) throw zero_mass("ks_inverse: zero measure");
    const double L = lam.band_length();

    unit_interval_measure mu;
    for (const auto& [x, w] : lam.atoms)
        mu.atoms.emplace_back(std::log(x) / L, w / c);
    const bool has_cells = !lam.density_cells.empty();
    if (lam.log_uniform_weight > 0.0 || has_cells) {
        const std::size_t n = has_cells ? lam.density_cells.size() : 1;
        mu.density_cells.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = lam.log_uniform_weight + (has_cells ? lam.density_cells[i] : 0.0);
            mu.density_cells[i] = g * L / c; // du = L dt, then normalize by c
        }
    }
    return {mu, c};
}

// ---------------------------------------------------------------------------
// Q-process recurrence criterion: partial sums only, no verdict
// ---------------------------------------------------------------------------

// S_n = sum_{j<=n} prod_{k<=j} (1 - eta(q_k)) with eta(z) defined by
// 1 - F(z) = m (1-z)(1 - eta(z)), evaluated at q_k = F_k(0). Using survival
// probabilities, 1 - eta(q_k) = p_{k+1}/(m p_k), an all-positive expression.
// Divergence of S_n is the recurrence criterion for the Q-process; a finite
// run cannot certify it, so only the sequence is returned.
inline std::vector<double> joffe_partial_sums(const offspring_distribution& dist, int N) {
    if (N < 1) throw invalid_config("joffe_partial_sums: N must be >= 1");
    const double m = dist.mean();
    std::vector<double> s;
    s.reserve(static_cast<std::size_t>(N));
    double p = 1.0, prod = 1.0, acc = 0.0;
    double ratio = dist.survival_ratio(p); // p_1 / p_0
    for (int n = 1; n <= N; ++n) {
        p *= ratio;                     // p_n
        ratio = dist.survival_ratio(p); // p_{n+1} / p_n
        prod *= ratio / m;              // * (1 - eta(q_n))
        acc += prod;
        s.push_back(acc);
    }
    return s;
}

} // namespace bgw
