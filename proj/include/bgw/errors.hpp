#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bgw {

// Base class for all library errors. `name()` is the stable machine-readable
// identifier that the CLI prints in its single-line error format.
class error : public std::runtime_error {
public:
    error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

// A series or grid input contained NaN or infinity.
class non_finite_input : public error {
public:
    explicit non_finite_input(const std::string& what) : error("NonFiniteInput", what) {}
};

// series_compose(mode=formal) requires inner(0) == 0.
class formal_composition_requires_zero_constant : public error {
public:
    explicit formal_composition_requires_zero_constant(const std::string& what)
        : error("FormalCompositionRequiresZeroConstant", what) {}
};

// series log/pow need a positive constant term.
class non_positive_constant_term : public error {
public:
    explicit non_positive_constant_term(const std::string& what)
        : error("NonPositiveConstantTerm", what) {}
};

// Offspring pmf has a negative entry or does not sum to 1.
class invalid_pmf : public error {
public:
    explicit invalid_pmf(const std::string& what) : error("InvalidPmf", what) {}
};

// Offspring mean outside (0,1).
class not_subcritical : public error {
public:
    explicit not_subcritical(const std::string& what) : error("NotSubcritical", what) {}
};

// Self-similar measure spec violates its invariants (bad ratio, nonpositive
// atom weight, negative density cell, ...).
class invalid_measure : public error {
public:
    explicit invalid_measure(const std::string& what) : error("InvalidMeasure", what) {}
};

// Fixed-point iteration hit n_max with sup_delta still at or above tol.
class no_convergence : public error {
public:
    no_convergence(const std::string& what, double sup_delta)
        : error("NoConvergence", what), sup_delta_(sup_delta) {}

    double sup_delta() const noexcept { return sup_delta_; }

private:
    double sup_delta_;
};

// Band contributions refuse to decay: alpha >= 1 misuse or a bad integrand.
class band_sum_diverging : public error {
public:
    explicit band_sum_diverging(const std::string& what) : error("BandSumDiverging", what) {}
};

// alpha outside the admissible range of the requested representation.
class out_of_range_alpha : public error {
public:
    explicit out_of_range_alpha(const std::string& what) : error("OutOfRangeAlpha", what) {}
};

// closed-form kind inconsistent with the sign of alpha.
class kind_alpha_mismatch : public error {
public:
    explicit kind_alpha_mismatch(const std::string& what) : error("KindAlphaMismatch", what) {}
};

// Adaptive quadrature failed to converge within its level budget.
class quadrature_failure : public error {
public:
    explicit quadrature_failure(const std::string& what) : error("QuadratureFailure", what) {}
};

// Too few lattice points fall inside the recovery window.
class insufficient_support : public error {
public:
    explicit insufficient_support(const std::string& what)
        : error("InsufficientSupport", what) {}
};

// Inverse conversion of the zero measure.
class zero_mass : public error {
public:
    explicit zero_mass(const std::string& what) : error("ZeroMass", what) {}
};

// Discrete sampler tail mass still above 1e-6 after two table doublings
// under the strict rejection policy.
class tail_mass_too_large : public error {
public:
    explicit tail_mass_too_large(const std::string& what)
        : error("TailMassTooLarge", what) {}
};

// Forward simulation produced no surviving path.
class no_survivors : public error {
public:
    explicit no_survivors(const std::string& what) : error("NoSurvivors", what) {}
};

// Malformed run configuration or JSON spec (unknown keys, wrong types).
class invalid_config : public error {
public:
    explicit invalid_config(const std::string& what) : error("InvalidConfig", what) {}
};

} // namespace bgw
