#pragma once

// Yaglom limit of a subcritical branching process killed at 0: the law
// nu_min of Z_n conditioned on survival, in the limit n -> infty, together
// with the survival sequence p_n = 1 - F_n(0).
//
// The conditioned pgf H_n(z) = (F_n(z) - q_n) / p_n (q_n = F_n(0)) is
// iterated directly instead of via F_n: the update
//
//     p_{n+1} = p_n * (1 - F(1-p_n)) / p_n,
//     H_{n+1} = sum_{j>=1} c_j (p_n H_n)^j / p_{n+1},   c_j = F^(j)(q_n)/j!,
//
// has only nonnegative terms, so the coefficients of H_n carry no
// cancellation even when p_n underflows far below the target tolerance
// (the subtraction route F_n(z) - q_n loses all significant digits once
// p_n ~ 1e-12).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "branching.hpp"
#include "errors.hpp"
#include "series.hpp"

namespace bgw {

struct yaglom_result {
    truncated_series H = truncated_series::constant(0.0, 1); // pgf of nu_min, order K
    std::vector<double> nu_min;    // index-aligned pmf on {1..K}; nu_min[0] = 0
    std::vector<double> p_seq;     // p_0 = 1, p_1, ..., p_N
    std::vector<double> ratio_seq; // p_{n+1}/p_n, n = 0..N-1; tail -> m
    int iterations = 0;
    double sup_delta = 0.0;        // final sup_k |H_{n+1}[k] - H_n[k]|
};

// F_n as a truncated series: F_0 = z, F_{n+1} = F(F_n).
inline truncated_series iterate_pgf(const offspring_distribution& dist, int n, std::size_t K) {
    if (n < 0) throw invalid_config("iterate_pgf: n must be >= 0");
    truncated_series fn = truncated_series::identity(K);
    const truncated_series f = dist.pgf_series();
    for (int i = 0; i < n; ++i)
        fn = compose(f, fn, compose_mode::polynomial_outer, K);
    return fn;
}

inline yaglom_result yaglom_limit(const offspring_distribution& dist, std::size_t K,
                                  double tol = 1e-12, int n_max = 10000) {
    if (!(tol > 0.0)) throw invalid_config("yaglom_limit: tol must be > 0");
    if (K < 1) throw invalid_config("yaglom_limit: K must be >= 1");

    yaglom_result res;
    res.H = truncated_series::identity(K); // H_0 = z
    res.p_seq.push_back(1.0);

    double p = 1.0;
    for (int n = 0; n < n_max; ++n) {
        const double ratio = dist.survival_ratio(p); // (1 - F(1-p)) / p, all positive terms
        const double p_next = p * ratio;

        std::vector<double> c = dist.taylor_at_survival(p); // c_j = F^(j)(1-p)/j!
        c[0] = 0.0;
        const truncated_series outer(std::move(c));
        const truncated_series w = scale(res.H, p);
        truncated_series h_next =
            scale(compose(outer, w, compose_mode::polynomial_outer, K), 1.0 / p_next);

        double sup_delta = 0.0;
        for (std::size_t k = 0; k <= K; ++k)
            sup_delta = std::max(sup_delta, std::abs(h_next[k] - res.H[k]));

        res.H = std::move(h_next);
        res.p_seq.push_back(p_next);
        res.ratio_seq.push_back(ratio);
        res.iterations = n + 1;
        res.sup_delta = sup_delta;
        p = p_next;

        if (sup_delta < tol) {
            res.nu_min.assign(K + 1, 0.0);
            for (std::size_t k = 1; k <= K; ++k) res.nu_min[k] = res.H[k];
            return res;
        }
    }
    throw no_convergence("yaglom_limit: no convergence after " + std::to_string(n_max) +
                             " iterations",
                         res.sup_delta);
}

struct h_identity_result {
    double max_grid_residual = 0.0; // sup_z |H(F(z)) - H(F(0)) - m H(z)|
    double deficit_residual = 0.0;  // |H(F(0)) - (1 - m)|
};

// Residuals of the functional identities characterizing H, evaluated
// pointwise on a grid in (0,1).
inline h_identity_result h_identity_report(const yaglom_result& res,
                                           const offspring_distribution& dist,
                                           const std::vector<double>& zgrid) {
    h_identity_result out;
    const double m = dist.mean();
    const double hf0 = res.H.eval(dist.pgf(0.0));
    out.deficit_residual = std::abs(hf0 - (1.0 - m));
    for (double z : zgrid) {
        const double lhs = res.H.eval(dist.pgf(z)) - hf0;
        out.max_grid_residual = std::max(out.max_grid_residual,
                                         std::abs(lhs - m * res.H.eval(z)));
    }
    return out;
}

} // namespace bgw
