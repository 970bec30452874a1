#pragma once

// Stochastic cross-validation. The QSD first-jump law is sampled through the
// exact compound route: N from the mixed-Poisson law P(N=k) = int e^{-x}
// x^k/k! x^{-alpha} Lambda(dx), then a sum of N Yaglom draws. Reports carry
// empirical-vs-reference pmfs on {1..K_ref} plus one overflow bucket, total
// variation on that lumping, and a pooled chi-square statistic. All sampling
// runs on 16 serial shards with seeds derived from the master seed, and
// every reduction is in fixed order, so a report is bit-reproducible from
// its seed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "branching.hpp"
#include "construct.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "selfsimilar.hpp"
#include "yaglom.hpp"

namespace bgw {

// ---------------------------------------------------------------------------
// subordinator cumulant  kappa(theta) = a theta + int (1-e^{-theta x}) M(dx)
// ---------------------------------------------------------------------------

// M(dx) = x^{-alpha} Lambda(dx). Valid specs: alpha in (0,1) with zero drift
// and QSD-normalized Lambda, or the pure-drift case alpha = 1, a = 1, M = 0.
// Either way kappa(1) = 1, and kappa(m theta) = m^alpha kappa(theta).
struct subordinator_spec {
    double alpha = 0.5;
    self_similar_measure lam;
    double drift = 0.0;
    double kappa_at_1 = 1.0;

    static subordinator_spec semi_stable(double alpha, const self_similar_measure& lam,
                                         double rel_tol = 1e-10) {
        if (!(alpha > 0.0) || !(alpha < 1.0))
            throw out_of_range_alpha("subordinator_spec: semi-stable case needs alpha in (0,1)");
        subordinator_spec spec;
        spec.alpha = alpha;
        spec.lam = lam;
        spec.drift = 0.0;
        spec.kappa_at_1 = qsd_normalization_integral(lam, alpha, rel_tol);
        if (std::abs(spec.kappa_at_1 - 1.0) > 1e-8)
            throw invalid_measure("subordinator_spec: kappa(1) = " +
                                  std::to_string(spec.kappa_at_1) +
                                  ", Lambda is not QSD-normalized");
        return spec;
    }

    static subordinator_spec drift_only(double m) {
        subordinator_spec spec;
        spec.alpha = 1.0;
        spec.lam.m = m;
        spec.drift = 1.0;
        spec.kappa_at_1 = 1.0;
        return spec;
    }

    double kappa(double theta, double rel_tol = 1e-10) const {
        if (!std::isfinite(theta) || theta < 0.0)
            throw invalid_config("kappa: theta must be >= 0");
        double v = drift * theta;
        if (alpha < 1.0 && !lam.is_zero())
            v += integrate_selfsimilar(
                     lam, alpha, [theta](double x) { return -std::expm1(-theta * x); },
                     rel_tol)
                     .value;
        return v;
    }
};

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

struct mc_report {
    std::size_t n_samples = 0;
    std::vector<double> empirical_pmf; // index-aligned on {1..K_ref}
    double empirical_overflow = 0.0;   // empirical mass beyond K_ref
    std::vector<double> reference_pmf;
    double reference_overflow = 0.0;   // reference deficit beyond K_ref
    double tv_distance = 0.0;
    double chi2_stat = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, double> extras;
};

namespace detail {

// TV on the lumped space {1..K_ref} + overflow; chi2 with cells pooled left
// to right until each expected count reaches 10 (overflow joins the last
// pool). extras get the pooled cell count.
inline void finalize_report(mc_report& rep, const std::vector<std::uint64_t>& counts,
                            std::uint64_t overflow_count, std::size_t n) {
    const auto dn = static_cast<double>(n);
    const std::size_t K = rep.reference_pmf.size() - 1;
    rep.n_samples = n;
    rep.empirical_pmf.assign(K + 1, 0.0);
    for (std::size_t k = 1; k <= K; ++k)
        rep.empirical_pmf[k] = static_cast<double>(counts[k]) / dn;
    rep.empirical_overflow = static_cast<double>(overflow_count) / dn;

    double refsum = 0.0;
    for (std::size_t k = 1; k <= K; ++k) refsum += rep.reference_pmf[k];
    rep.reference_overflow = std::max(0.0, 1.0 - refsum);

    double tv = std::abs(rep.empirical_overflow - rep.reference_overflow);
    for (std::size_t k = 1; k <= K; ++k)
        tv += std::abs(rep.empirical_pmf[k] - rep.reference_pmf[k]);
    rep.tv_distance = 0.5 * tv;

    double chi2 = 0.0, obs = 0.0, exp_ = 0.0;
    std::size_t cells = 0;
    for (std::size_t k = 1; k <= K; ++k) {
        obs += static_cast<double>(counts[k]);
        exp_ += dn * rep.reference_pmf[k];
        if (exp_ >= 10.0) {
            chi2 += (obs - exp_) * (obs - exp_) / exp_;
            ++cells;
            obs = exp_ = 0.0;
        }
    }
    obs += static_cast<double>(overflow_count);
    exp_ += dn * rep.reference_overflow;
    if (exp_ >= 10.0) {
        chi2 += (obs - exp_) * (obs - exp_) / exp_;
        ++cells;
    }
    rep.chi2_stat = chi2;
    rep.extras["chi2_cells"] = static_cast<double>(cells);
}

constexpr int n_shards = 16;

// Serial sharded run: draw() returns a positive integer; counts land on
// {1..K_ref} with everything above K_ref in the overflow bucket.
template <class Draw>
mc_report run_sharded(std::size_t n_samples, std::uint64_t seed,
                      const std::vector<double>& reference_pmf, Draw&& draw) {
    if (n_samples == 0) throw invalid_config("monte carlo: n_samples must be > 0");
    const std::size_t K = reference_pmf.size() - 1;
    std::vector<std::uint64_t> counts(K + 1, 0);
    std::uint64_t overflow = 0;
    for (int shard = 0; shard < n_shards; ++shard) {
        rng_stream g = make_stream(derive_seed(seed, static_cast<std::uint64_t>(shard)));
        std::size_t quota = n_samples / n_shards +
            (static_cast<std::size_t>(shard) < n_samples % n_shards ? 1 : 0);
        for (std::size_t i = 0; i < quota; ++i) {
            const long v = draw(g);
            if (v >= 1 && static_cast<std::size_t>(v) <= K)
                ++counts[static_cast<std::size_t>(v)];
            else
                ++overflow;
        }
    }
    mc_report rep;
    rep.seed = seed;
    rep.reference_pmf = reference_pmf;
    finalize_report(rep, counts, overflow, n_samples);
    return rep;
}

} // namespace detail

// ---------------------------------------------------------------------------
// QSD / first-jump sampler
// ---------------------------------------------------------------------------

// Beyond the tabulated range of the N-law the two policies differ: power_law
// draws from the matched Pareto tail P(N > n) = (1-cdf_T)(n/T)^{-alpha}
// (the N-law tail is regularly varying with index alpha), reject_strict
// redraws inside the table and refuses to run when the tail mass exceeds
// 1e-6 after the table has been doubled twice.
enum class tail_policy { power_law, reject_strict };

class qsd_sampler {
  public:
    qsd_sampler(const offspring_distribution& dist, const subordinator_spec& spec,
                std::size_t K, double rel_tol = 1e-10,
                tail_policy policy = tail_policy::power_law)
        : dist_(dist), spec_(spec), policy_(policy), table_K_(K), rel_tol_(rel_tol) {
        const yaglom_result yag = yaglom_limit(dist, std::max<std::size_t>(K, 64));
        pure_death_ = dist.max_litter() <= 1;
        yaglom_mean_ = 0.0;
        double m2 = 0.0;
        for (std::size_t k = 1; k < yag.nu_min.size(); ++k) {
            yaglom_mean_ += static_cast<double>(k) * yag.nu_min[k];
            m2 += static_cast<double>(k) * static_cast<double>(k) * yag.nu_min[k];
        }
        yaglom_var_ = std::max(0.0, m2 - yaglom_mean_ * yaglom_mean_);
        yaglom_draw_ = discrete_sampler(yag.nu_min, 0); // index-aligned: entry k = value k
        if (spec.alpha < 1.0) rebuild_table();
    }

    // One draw of the compound sum; for alpha = 1 (drift case) the law is
    // nu_min itself.
    long sample(rng_stream& g) {
        if (spec_.alpha >= 1.0) return static_cast<long>(yaglom_draw_.draw(g));
        const long n = draw_n(g);
        return compound(n, g);
    }

    double table_deficit() const noexcept { return deficit_; }
    std::size_t table_size() const noexcept { return table_K_; }

  private:
    void rebuild_table() {
        const n_law law = nlaw_pmf(spec_.alpha, spec_.lam, table_K_, rel_tol_);
        double sum = 0.0;
        for (double v : law.pmf) sum += v;
        deficit_ = std::max(0.0, 1.0 - sum);
        n_draw_ = discrete_sampler(law.pmf, 0); // index-aligned: entry k = value k
        cdf_top_ = sum;
    }

    long draw_n(rng_stream& g) {
        for (;;) {
            const double u = uniform01(g);
            if (u < cdf_top_) return static_cast<long>(n_draw_.value_for(u));
            if (doublings_ < 2) {
                table_K_ *= 2;
                rebuild_table();
                ++doublings_;
                if (u < cdf_top_) return static_cast<long>(n_draw_.value_for(u));
                continue;
            }
            if (policy_ == tail_policy::power_law) {
                // matched Pareto tail: N = T ((1-cdf_T)/(1-u))^{1/alpha}
                const double ratio = deficit_ / (1.0 - u);
                const double v = static_cast<double>(table_K_) *
                    std::pow(ratio, 1.0 / spec_.alpha);
                return static_cast<long>(std::ceil(std::min(v, 4.0e18)));
            }
            if (deficit_ > 1e-6)
                throw tail_mass_too_large(
                    "qsd_sampler: N-law tail mass " + std::to_string(deficit_) +
                    " > 1e-6 after two table doublings (strict rejection policy)");
            // tail negligible: redraw
        }
    }

    long compound(long n, rng_stream& g) {
        if (pure_death_) return n; // every Yaglom draw is 1
        if (n >= (1L << 20)) {
            // CLT regime: individual summation is infeasible and the
            // relative error of the normal approximation is O(n^{-1/2}).
            const double s = static_cast<double>(n) * yaglom_mean_ +
                std::sqrt(static_cast<double>(n) * yaglom_var_) * standard_normal(g);
            return std::max(n, static_cast<long>(std::llround(std::min(s, 4.0e18))));
        }
        long s = 0;
        for (long i = 0; i < n; ++i) s += static_cast<long>(yaglom_draw_.draw(g));
        return s;
    }

    offspring_distribution dist_;
    subordinator_spec spec_;
    tail_policy policy_;
    std::size_t table_K_;
    double rel_tol_;
    int doublings_ = 0;
    bool pure_death_ = false;
    double yaglom_mean_ = 1.0, yaglom_var_ = 0.0;
    double deficit_ = 0.0, cdf_top_ = 1.0;
    discrete_sampler yaglom_draw_, n_draw_;
};

// Empirical law of the sampler vs a reference pmf (index-aligned on
// {1..K_ref}).
inline mc_report sample_qsd_report(qsd_sampler& sampler, std::size_t n_samples,
                                   std::uint64_t seed,
                                   const std::vector<double>& reference_pmf) {
    mc_report rep = detail::run_sharded(n_samples, seed, reference_pmf,
                                        [&](rng_stream& g) { return sampler.sample(g); });
    rep.extras["nlaw_table_deficit"] = sampler.table_deficit();
    rep.extras["nlaw_table_size"] = static_cast<double>(sampler.table_size());
    return rep;
}

// ---------------------------------------------------------------------------
// one-step quasi-stationarity and Yaglom convergence
// ---------------------------------------------------------------------------

// Z_0 ~ nu (renormalized on {1..K}; the adjustment is recorded), one
// transition, conditioned on survival; the conditioned law is compared to nu
// itself. n_samples counts accepted (surviving) transitions.
inline mc_report quasi_stationarity_test(const offspring_distribution& dist,
                                         const std::vector<double>& nu, std::size_t K,
                                         std::size_t n_samples, std::uint64_t seed) {
    if (K < 1 || K >= nu.size())
        throw invalid_config("quasi_stationarity_test: need 1 <= K <= measure order");
    std::vector<double> ref(K + 1, 0.0);
    double sum = 0.0;
    for (std::size_t k = 1; k <= K; ++k) sum += nu[k];
    if (sum <= 0.0) throw zero_mass("quasi_stationarity_test: measure has no mass on {1..K}");
    for (std::size_t k = 1; k <= K; ++k) ref[k] = nu[k] / sum;

    discrete_sampler z0(ref, 0); // index-aligned: entry k = value k
    std::uint64_t attempts = 0;
    mc_report rep = detail::run_sharded(n_samples, seed, ref, [&](rng_stream& g) {
        for (;;) {
            ++attempts;
            const std::uint64_t z1 = simulate_step(dist, z0.draw(g), g);
            if (z1 > 0) return static_cast<long>(z1);
        }
    });
    rep.extras["renormalization"] = 1.0 / sum;
    rep.extras["acceptance_rate"] =
        static_cast<double>(n_samples) / static_cast<double>(attempts);
    return rep;
}

// Paths from Z_0 = 1 over n steps; the surviving histogram is compared to
// nu_min truncated at K_ref. n_samples counts paths, not survivors.
inline mc_report yaglom_mc(const offspring_distribution& dist, int n, std::size_t n_samples,
                           std::uint64_t seed, std::size_t K_ref = 64) {
    if (n < 1) throw invalid_config("yaglom_mc: n must be >= 1");
    const yaglom_result yag = yaglom_limit(dist, std::max(K_ref, std::size_t{64}));

    std::vector<double> ref(K_ref + 1, 0.0);
    for (std::size_t k = 1; k <= K_ref; ++k) ref[k] = yag.nu_min[k];

    double p_n = 1.0;
    for (int i = 0; i < n; ++i) p_n *= dist.survival_ratio(p_n);

    std::vector<std::uint64_t> counts(K_ref + 1, 0);
    std::uint64_t overflow = 0, survivors = 0;
    for (int shard = 0; shard < detail::n_shards; ++shard) {
        rng_stream g = make_stream(derive_seed(seed, static_cast<std::uint64_t>(shard)));
        std::size_t quota = n_samples / detail::n_shards +
            (static_cast<std::size_t>(shard) < n_samples % detail::n_shards ? 1 : 0);
        for (std::size_t i = 0; i < quota; ++i) {
            std::uint64_t z = 1;
            for (int step = 0; step < n && z > 0; ++step) z = simulate_step(dist, z, g);
            if (z == 0) continue;
            ++survivors;
            if (z <= K_ref)
                ++counts[z];
            else
                ++overflow;
        }
    }
    if (survivors == 0)
        throw no_survivors("yaglom_mc: no surviving path at n = " + std::to_string(n) +
                           " (expected survival fraction " + std::to_string(p_n) + ")");

    mc_report rep;
    rep.seed = seed;
    rep.reference_pmf = std::move(ref);
    detail::finalize_report(rep, counts, overflow, survivors);
    rep.extras["paths"] = static_cast<double>(n_samples);
    rep.extras["survival_fraction"] =
        static_cast<double>(survivors) / static_cast<double>(n_samples);
    rep.extras["p_n"] = p_n;
    rep.extras["low_survival_warning"] = p_n < 1e-4 ? 1.0 : 0.0;
    return rep;
}

} // namespace bgw
