#pragma once

// Construction of lambda-invariant measures of the killed branching process
// (and true invariant measures of the unkilled one) from the ingredients
// (offspring law, alpha, self-similar measure Lambda), lambda = m^alpha:
//
//   nu(k) = int_0^infty c_k(x) x^{-alpha} Lambda(dx),
//
// where c_k(x) is the pmf at k of a Poisson(x)-compound of nu_min. The
// subtraction of e^{-x} in the generating-function form only removes the
// k = 0 term, so killed-process measures simply drop that component; true
// measures (alpha < 0) keep it. The Lambda = dx/x family has closed forms
// 1-(1-H)^alpha, -log(1-H), (1-H)^alpha - 1 used both as a fast path and as
// an independent oracle for the integral route.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "branching.hpp"
#include "errors.hpp"
#include "selfsimilar.hpp"
#include "series.hpp"
#include "yaglom.hpp"

namespace bgw {

enum class measure_kind { integral, closed_form, extremal };
enum class closed_form_kind { qsd_power, log, negative_power };

struct measure_source {
    measure_kind kind = measure_kind::integral;
    closed_form_kind form = closed_form_kind::qsd_power; // when kind == closed_form
    double t = 0.0;                                      // when kind == extremal

    std::string to_string() const {
        switch (kind) {
            case measure_kind::integral: return "integral";
            case measure_kind::extremal: return "extremal(t=" + std::to_string(t) + ")";
            case measure_kind::closed_form:
                switch (form) {
                    case closed_form_kind::qsd_power: return "closed_form(qsd_power)";
                    case closed_form_kind::log: return "closed_form(log)";
                    case closed_form_kind::negative_power:
                        return "closed_form(negative_power)";
                }
        }
        return "unknown";
    }
};

// A lambda-invariant measure truncated at K. nu is index-aligned: nu[k] is
// the mass at population size k, k = 0..K; nu[0] = 0 unless includes_zero
// (true invariant measures of the unkilled process charge 0).
struct invariant_measure {
    std::vector<double> nu;
    double alpha = 0.0;
    double lambda = 1.0;
    bool includes_zero = false;
    measure_source source;
    double trunc_error_hint = 0.0;

    std::size_t K() const noexcept { return nu.empty() ? 0 : nu.size() - 1; }

    double eval_pgf(double z) const noexcept { // G(z) = sum nu(k) z^k, truncated
        double acc = 0.0;
        for (std::size_t k = nu.size(); k-- > 0;) acc = acc * z + nu[k];
        return acc;
    }
};

struct n_law {
    std::vector<double> pmf; // index-aligned on {1..K}; pmf[0] = 0
    double alpha = 0.5;
    double trunc_error_hint = 0.0;
};

// ---------------------------------------------------------------------------
// compound Poisson coefficients
// ---------------------------------------------------------------------------

namespace detail {

// j * nu_min(j) with the numerically irrelevant tail dropped; inner-loop
// length then tracks the decay of nu_min instead of K.
inline std::vector<double> weighted_support(const std::vector<double>& nu_min) {
    std::size_t last = 0;
    for (std::size_t j = 1; j < nu_min.size(); ++j) {
        if (!(nu_min[j] >= 0.0))
            throw invalid_pmf("compound_poisson_pmf: nu_min entries must be >= 0");
        if (nu_min[j] > 1e-18) last = j;
    }
    std::vector<double> jnu(last + 1, 0.0);
    for (std::size_t j = 1; j <= last; ++j) jnu[j] = static_cast<double>(j) * nu_min[j];
    return jnu;
}

} // namespace detail

// pmf of S = sum_{i<=N} Y_i, N ~ Poisson(x), Y ~ nu_min iid, for k = 0..K:
// c_0 = e^{-x}, c_k = (x/k) sum_{j>=1} j nu_min(j) c_{k-j}. All terms are
// nonnegative, so the recursion is cancellation-free. Beyond x ~ 700 the
// prefactor e^{-x} underflows; the recursion then runs on 2^shift-rescaled
// values and each coefficient is recovered through exp(log), which costs a
// few ulps but keeps every intermediate in range for x up to ~5e5.
inline std::vector<double> compound_poisson_pmf(const std::vector<double>& nu_min, double x,
                                                std::size_t K) {
    if (!std::isfinite(x) || !(x > 0.0))
        throw invalid_config("compound_poisson_pmf: x must be finite and > 0");
    const std::vector<double> jnu = detail::weighted_support(nu_min);
    const std::size_t J = jnu.empty() ? 0 : jnu.size() - 1;

    std::vector<double> c(K + 1, 0.0);
    if (x <= 700.0) {
        c[0] = std::exp(-x);
        for (std::size_t k = 1; k <= K; ++k) {
            double acc = 0.0;
            for (std::size_t j = 1; j <= std::min(k, J); ++j) acc += jnu[j] * c[k - j];
            c[k] = acc * x / static_cast<double>(k);
        }
        return c;
    }

    // scaled recursion: work[k] = c[k] * e^{x} * 2^{-shift}
    std::vector<double> work(K + 1, 0.0);
    work[0] = 1.0;
    long shift = 0;
    for (std::size_t k = 1; k <= K; ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= std::min(k, J); ++j) acc += jnu[j] * work[k - j];
        work[k] = acc * x / static_cast<double>(k);
        if (work[k] > 1e250) {
            for (std::size_t i = 0; i <= k; ++i) work[i] = std::ldexp(work[i], -1660);
            shift += 1660;
        }
    }
    const double log_correction = static_cast<double>(shift) * M_LN2 - x;
    for (std::size_t k = 0; k <= K; ++k)
        c[k] = work[k] > 0.0 ? std::exp(std::log(work[k]) + log_correction) : 0.0;
    return c;
}

// ---------------------------------------------------------------------------
// integral-route measures
// ---------------------------------------------------------------------------

namespace detail {

inline integrate_options bands_for_order(const self_similar_measure& lam, std::size_t K) {
    integrate_options opt;
    // Component k peaks near x ~ k / E[Y] <= K; force the right-side sweep
    // past 2(K+2) before the stopping rule may engage, so late-peaking
    // components are not frozen at zero by early small bands.
    opt.min_bands_right = std::max<int>(
        4, static_cast<int>(std::ceil(std::log(2.0 * (static_cast<double>(K) + 2.0)) /
                                      lam.band_length())) + 2);
    return opt;
}

} // namespace detail

// nu(k) = int c_k(x) x^{-alpha} Lambda(dx), k = 1..K (killed process; the
// e^{-x} term of the generating-function representation only affects k = 0,
// which is excluded here). Requires alpha < 1; lambda = m^alpha.
inline invariant_measure integral_measure(const offspring_distribution& dist, double alpha,
                                          const self_similar_measure& lam, std::size_t K,
                                          double rel_tol = 1e-10) {
    if (!std::isfinite(alpha)) throw non_finite_input("integral_measure: non-finite alpha");
    if (!(alpha < 1.0))
        throw out_of_range_alpha(
            "integral_measure: integral representation requires alpha < 1");
    if (lam.is_zero()) throw zero_mass("integral_measure: Lambda is the zero measure");
    if (std::abs(lam.m - dist.mean()) > 1e-12)
        throw invalid_measure("integral_measure: Lambda ratio must equal the offspring mean");

    const yaglom_result yag = yaglom_limit(dist, K);
    auto vec = integrate_selfsimilar_vec(
        lam, alpha, K,
        [&](double x, std::vector<double>& out) {
            const std::vector<double> c = compound_poisson_pmf(yag.nu_min, x, K);
            std::copy(c.begin() + 1, c.end(), out.begin());
        },
        rel_tol, detail::bands_for_order(lam, K));

    invariant_measure res;
    res.nu.assign(K + 1, 0.0);
    std::copy(vec.values.begin(), vec.values.end(), res.nu.begin() + 1);
    res.alpha = alpha;
    res.lambda = std::pow(dist.mean(), alpha);
    res.includes_zero = false;
    res.source.kind = measure_kind::integral;
    res.trunc_error_hint = vec.tail_estimate;
    return res;
}

// True invariant measure of the unkilled process (alpha < 0 only): no
// e^{-x} subtraction, so k = 0 carries mass int e^{-x} x^{-alpha} Lambda(dx).
inline invariant_measure true_invariant_measure(const offspring_distribution& dist,
                                                double alpha, const self_similar_measure& lam,
                                                std::size_t K, double rel_tol = 1e-10) {
    if (!std::isfinite(alpha))
        throw non_finite_input("true_invariant_measure: non-finite alpha");
    if (!(alpha < 0.0))
        throw out_of_range_alpha(
            "true_invariant_measure: requires alpha < 0 (lambda > 1); in [0,1) only the "
            "killed process carries invariant measures");
    if (lam.is_zero()) throw zero_mass("true_invariant_measure: Lambda is the zero measure");
    if (std::abs(lam.m - dist.mean()) > 1e-12)
        throw invalid_measure(
            "true_invariant_measure: Lambda ratio must equal the offspring mean");

    const yaglom_result yag = yaglom_limit(dist, K);
    auto vec = integrate_selfsimilar_vec(
        lam, alpha, K + 1,
        [&](double x, std::vector<double>& out) {
            const std::vector<double> c = compound_poisson_pmf(yag.nu_min, x, K);
            std::copy(c.begin(), c.end(), out.begin());
        },
        rel_tol, detail::bands_for_order(lam, K));

    invariant_measure res;
    res.nu = std::move(vec.values);
    res.alpha = alpha;
    res.lambda = std::pow(dist.mean(), alpha);
    res.includes_zero = true;
    res.source.kind = measure_kind::integral;
    res.trunc_error_hint = vec.tail_estimate;
    return res;
}

// ---------------------------------------------------------------------------
// closed forms (the Lambda = dx/x family) and extremal measures
// ---------------------------------------------------------------------------

inline invariant_measure closed_form_measure(const offspring_distribution& dist, double alpha,
                                             closed_form_kind kind, std::size_t K) {
    if (!std::isfinite(alpha)) throw non_finite_input("closed_form_measure: non-finite alpha");
    switch (kind) {
        case closed_form_kind::qsd_power:
            if (!(alpha > 0.0) || alpha > 1.0)
                throw kind_alpha_mismatch("closed_form_measure: qsd_power needs alpha in (0,1]");
            break;
        case closed_form_kind::log:
            if (alpha != 0.0)
                throw kind_alpha_mismatch("closed_form_measure: log kind needs alpha = 0");
            break;
        case closed_form_kind::negative_power:
            if (!(alpha < 0.0))
                throw kind_alpha_mismatch(
                    "closed_form_measure: negative_power needs alpha < 0");
            break;
    }

    const yaglom_result yag = yaglom_limit(dist, K);
    std::vector<double> u(K + 1, 0.0); // 1 - H
    u[0] = 1.0;
    for (std::size_t k = 1; k <= K; ++k) u[k] = -yag.H[k];
    const truncated_series one_minus_h(std::move(u));

    std::vector<double> g(K + 1, 0.0);
    if (kind == closed_form_kind::qsd_power) { // G = 1 - (1-H)^alpha
        const truncated_series p = series_pow(one_minus_h, alpha);
        for (std::size_t k = 1; k <= K; ++k) g[k] = -p[k];
    } else if (kind == closed_form_kind::log) { // G = -log(1-H)
        const truncated_series l = series_log(one_minus_h);
        for (std::size_t k = 1; k <= K; ++k) g[k] = -l[k];
    } else { // G = (1-H)^alpha - 1
        const truncated_series p = series_pow(one_minus_h, alpha);
        for (std::size_t k = 1; k <= K; ++k) g[k] = p[k];
    }
    for (std::size_t k = 1; k <= K; ++k)
        if (g[k] < 0.0 && g[k] > -1e-13) g[k] = 0.0; // roundoff under the analytic >= 0

    invariant_measure res;
    res.nu = std::move(g);
    res.alpha = alpha;
    res.lambda = std::pow(dist.mean(), alpha);
    res.includes_zero = false;
    res.source.kind = measure_kind::closed_form;
    res.source.form = kind;
    res.trunc_error_hint = yag.sup_delta;
    return res;
}

// Extremal point of the simplex of 1-invariant measures: alpha = 0 with
// Lambda a unit atom at m^{-t}, t in [0,1) sweeping the fundamental domain.
inline invariant_measure extremal_invariant_measure(const offspring_distribution& dist,
                                                    double t, std::size_t K,
                                                    double rel_tol = 1e-10) {
    if (!std::isfinite(t) || t < 0.0 || t >= 1.0)
        throw invalid_config("extremal_invariant_measure: t must lie in [0,1)");
    const self_similar_measure lam = self_similar_measure::from_atoms(
        dist.mean(), {{std::pow(dist.mean(), -t), 1.0}});
    invariant_measure res = integral_measure(dist, 0.0, lam, K, rel_tol);
    res.source.kind = measure_kind::extremal;
    res.source.t = t;
    return res;
}

// ---------------------------------------------------------------------------
// the law of N (number of Yaglom draws the QSD compounds)
// ---------------------------------------------------------------------------

// P(N = k) = int e^{-x} x^k / k!  x^{-alpha} Lambda(dx), k >= 1; P(N=0) = 0.
// Lambda must already be QSD-normalized (checked, not repaired).
inline n_law nlaw_pmf(double alpha, const self_similar_measure& lam, std::size_t K,
                      double rel_tol = 1e-10) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw out_of_range_alpha("nlaw_pmf: requires alpha in (0,1)");
    const double total = qsd_normalization_integral(lam, alpha, std::min(rel_tol, 1e-8));
    if (std::abs(total - 1.0) > 1e-6)
        throw invalid_measure("nlaw_pmf: Lambda is not QSD-normalized (integral = " +
                              std::to_string(total) + ")");

    const std::vector<double> delta1 = {0.0, 1.0}; // compound of ones = plain Poisson
    auto vec = integrate_selfsimilar_vec(
        lam, alpha, K,
        [&](double x, std::vector<double>& out) {
            const std::vector<double> c = compound_poisson_pmf(delta1, x, K);
            std::copy(c.begin() + 1, c.end(), out.begin());
        },
        rel_tol, detail::bands_for_order(lam, K));

    n_law res;
    res.pmf.assign(K + 1, 0.0);
    std::copy(vec.values.begin(), vec.values.end(), res.pmf.begin() + 1);
    res.alpha = alpha;
    res.trunc_error_hint = vec.tail_estimate;
    return res;
}

} // namespace bgw
