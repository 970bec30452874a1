#pragma once

// Quadrature primitives: cached Gauss-Legendre rules (nodes via Newton on the
// Legendre recurrence) and a tanh-sinh integrator for endpoint-sensitive
// integrands. Integrands passed to tanh_sinh receive the node and its
// distance to the upper endpoint computed without cancellation, so factors
// like (1-w)^{alpha-1} can be evaluated stably arbitrarily close to 1.

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "errors.hpp"

namespace bgw {

struct gl_rule {
    std::vector<double> x; // nodes on (-1,1)
    std::vector<double> w;
};

namespace detail {

inline gl_rule compute_gauss_legendre(int n) {
    gl_rule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < n; ++i) {
        // Tricomi initial guess, then Newton.
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[i] = x;
        rule.w[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return rule;
}

} // namespace detail

// Cached rule of the given order (thread-safe).
inline const gl_rule& gauss_legendre(int n) {
    static std::map<int, gl_rule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
    return it->second;
}

// Integrate f over [a,b] with a fixed GL rule; f(x) plain scalar callable.
template <class F>
double gl_integrate(F&& f, double a, double b, int order) {
    const gl_rule& r = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(mid + half * r.x[i]);
    return acc * half;
}

// ---------------------------------------------------------------------------
// tanh-sinh
// ---------------------------------------------------------------------------

struct tanh_sinh_options {
    double rel_tol = 1e-12;
    int max_level = 12;  // step h = 2^{-level}
    double t_max = 6.5;  // |t| beyond which weights underflow
};

// Integrate f over (a,b); f is called as f(x, b_minus_x). Levels are refined
// until two successive estimates agree to rel_tol; throws quadrature_failure
// if max_level is exhausted first.
template <class F>
double tanh_sinh(F&& f, double a, double b, const tanh_sinh_options& opt = {}) {
    if (!(b > a)) return 0.0;
    const double half = 0.5 * (b - a);
    const double piby2 = 1.57079632679489661923;

    // One abscissa: t -> node, stable distances to both endpoints.
    const auto eval_node = [&](double t) -> double {
        const double s = piby2 * std::sinh(t);
        // 1 - tanh(s) = 2 e^{-2s} / (1 + e^{-2s}); keep both tails stable.
        const double e = std::exp(-2.0 * std::abs(s));
        const double dist = 2.0 * e / (1.0 + e) * half; // distance to nearer endpoint
        const double w = piby2 * std::cosh(t) * (4.0 * e / ((1.0 + e) * (1.0 + e)));
        if (w == 0.0 || dist == 0.0) return 0.0;
        if (t >= 0.0) {
            const double x = b - dist;
            return w * f(x, dist);
        }
        const double x = a + dist;
        return w * f(x, b - x);
    };

    double h = 1.0;
    double sum = eval_node(0.0);
    for (double t = h; t <= opt.t_max; t += h) sum += eval_node(t) + eval_node(-t);
    double prev = sum * h * half;

    for (int level = 1; level <= opt.max_level; ++level) {
        h *= 0.5;
        for (double t = h; t <= opt.t_max; t += 2.0 * h) sum += eval_node(t) + eval_node(-t);
        const double cur = sum * h * half;
        const double scale = std::max(std::abs(cur), std::abs(prev));
        // level >= 2 guards against accidental agreement of the two coarsest grids
        if (level >= 2 && (std::abs(cur - prev) <= opt.rel_tol * scale || scale == 0.0))
            return cur;
        prev = cur;
    }
    throw quadrature_failure("tanh_sinh: no convergence to rel_tol " +
                             std::to_string(opt.rel_tol) + " within level budget");
}

} // namespace bgw
