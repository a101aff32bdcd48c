#pragma once

#include "quasilab/freqcond.hpp"
#include "quasilab/log_value.hpp"
#include "quasilab/montecarlo.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace quasilab::potential {

using mc::MeasureEstimate;

/// c_cos cos(2 pi k.x) + c_sin sin(2 pi k.x)
struct TrigTerm {
    std::vector<int> wave;
    double cos_coef = 0.0;
    double sin_coef = 0.0;
};

struct TrigPolynomial {
    double constant = 0.0;
    std::vector<TrigTerm> terms;
};

/// height on the box prod_i [corner_i, corner_i + side_i) taken mod 1.
struct IndicatorBox {
    std::vector<double> corner;
    std::vector<double> side;
    double height = 1.0;
};

/// Sum of indicator boxes; overlapping heights add.
struct StepSum {
    std::vector<IndicatorBox> boxes;
};

/// ||x - center||^-exponent with the Euclidean torus norm, 0 < exponent < 1/d.
/// Unbounded; `ceiling` caps level searches, not evaluation.
struct InversePowerSingularity {
    std::vector<double> center;
    double exponent = 0.25;
    double ceiling = 1e12;
};

using Family = std::variant<TrigPolynomial, IndicatorBox, StepSum, InversePowerSingularity>;

/// A function on T^d described by family and parameters.
class PotentialSpec {
public:
    PotentialSpec(int d, Family family);

    static PotentialSpec constant(int d, double value);
    static PotentialSpec cosine(double amplitude); // amplitude * cos(2 pi x), d = 1

    int dimension() const { return d_; }
    const Family& family() const { return family_; }
    std::string family_name() const;

    /// Upper bound on ||f||_inf (exact for a single trig term, a single box,
    /// and disjoint step sums); nullopt for unbounded families.
    std::optional<double> declared_sup() const { return sup_; }
    bool bounded() const { return sup_.has_value(); }

    /// f(x), coordinates reduced mod 1. Throws SingularEvaluation at the
    /// singular center of an inverse-power potential.
    double eval(std::span<const double> x) const;

    /// f(y + s) - f(y) for a shift s given per coordinate in log form, so
    /// shifts far below double resolution still produce a nonzero answer.
    /// Trig polynomials use the product formula for the cosine difference;
    /// inverse-power potentials use the gradient once |s| << ||y - c||;
    /// step families compare box membership in double precision.
    LogValue difference(std::span<const double> y, std::span<const LogValue> shift) const;

    /// Like eval but total: +inf at the singular center. Used by samplers,
    /// where hitting the center exactly has probability zero.
    double eval_total(std::span<const double> x) const;

    /// Exact |E(M)| when the level set has a closed form.
    std::optional<double> exact_level_measure(double level) const;

private:
    int d_;
    Family family_;
    std::optional<double> sup_;
};

// ---------------------------------------------------------------------------
// Measure estimators. All are deterministic functions of (seed, samples).

/// |F(y, eps)| = |{x : |f(x + y) - f(x)| >= eps}|
MeasureEstimate f_set_measure(const PotentialSpec& f, std::span<const double> shift, double epsilon,
                              const mc::Params& params);

struct LevelMeasure {
    MeasureEstimate estimate;
    std::optional<double> exact;

    /// Exact value when known, otherwise the sampled one.
    double value() const { return exact ? *exact : estimate.value; }
};

/// |E(M)| = |{x : |f(x)| > M}|
LevelMeasure e_set_measure(const PotentialSpec& f, double level, const mc::Params& params);

struct KappaOptions {
    double max_radius = 0.5;
    double min_radius = 1e-9;
    int refine_steps = 20;
};

/// Empirical lower-bound estimate of kappa(eps, eta): the largest radius r
/// found by halving from max_radius (then bisecting) such that every probe
/// shift of norm r (each axis direction and the main diagonal) has a Wilson
/// upper bound on |F(y, eps)| below eta. The true kappa is an infimum over
/// all shifts and is not computable; this is a probe-set estimate.
double estimate_kappa(const PotentialSpec& f, double epsilon, double eta, const mc::Params& params,
                      const KappaOptions& options = {});

struct LevelOptions {
    double rel_tol = 1e-3;
    /// Largest M tried for unbounded families; defaults to the family ceiling.
    std::optional<double> ceiling;
};

/// inf{M : |E(M)| <= (tau_1...tau_d)^-d} by bisection; returns the upper
/// bracket endpoint, at which the measure condition holds.
double m_tau_level(const PotentialSpec& f, std::span<const long long> tau, const mc::Params& params,
                   const LevelOptions& options = {});

/// f(x + m * alpha) with m_j = n_j mod tau_j in [0, tau_j).
double periodic_approximant(const PotentialSpec& f, std::span<const double> x, std::span<const double> alpha,
                            std::span<const long long> tau, std::span<const long long> n);
double periodic_approximant(const PotentialSpec& f, std::span<const double> x,
                            const freqcond::FrequencyVector& alpha, std::span<const long long> tau,
                            std::span<const long long> n);

struct ZTerm {
    std::vector<long long> j;
    /// ln of (|j_1|+...+|j_d|) M_tau^-((2d+gamma) tau_1...tau_d); -inf when j = 0
    double threshold_log = 0.0;
    std::optional<MeasureEstimate> x; // X_j; omitted for j = 0 (threshold 0 makes it the whole torus)
    MeasureEstimate y;                // Y_j
    double x_bound = 0.0;             // (|j_1|+...+|j_d|) / (tau_1...tau_d)^3
};

struct ZTauReport {
    double m_tau = 0.0;
    LevelMeasure e_at_m_tau;
    MeasureEstimate z;
    std::vector<ZTerm> terms;
    double x_sum = 0.0;           // sum of X_j estimates
    double y_sum = 0.0;           // sum of Y_j estimates
    double union_bound = 0.0;     // x_sum + y_sum
    double x_bound_sum = 0.0;     // sum of x_bound
    double y_bound_sum = 0.0;     // |I_tau| / (tau_1...tau_d)^d
};

struct ZTauOptions {
    std::size_t max_terms = 20000;
};

/// Estimates |X_j|, |Y_j| over j in I_tau and the measure of their union Z^tau.
/// I_tau = {j : |j_i| <= (2d + delta) tau_1...tau_d / tau_i}; needs gamma > 0,
/// 0 < delta < gamma / 2.
ZTauReport z_tau_measure(const PotentialSpec& f, const freqcond::FrequencyVector& alpha,
                         std::span<const long long> tau, double gamma, double delta, const mc::Params& params,
                         const ZTauOptions& options = {});

} // namespace quasilab::potential
