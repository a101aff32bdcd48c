#pragma once

#include "quasilab/freqcond.hpp"
#include "quasilab/log_value.hpp"
#include "quasilab/potential.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quasilab::gordon {

/// floor((2d + delta) tau_1...tau_d), the l-infinity radius of the comparison box.
long long box_radius(int d, std::span<const long long> tau, double delta);

/// Samples on the box [-R, R]^d, R = box_radius, row-major with the last
/// coordinate varying fastest.
struct GordonInput {
    int d = 1;
    std::vector<long long> tau;
    double gamma = 1.0;
    double delta = 0.5;
    double lambda0 = 1.0;
    std::vector<double> v;
    std::vector<double> v_per;
};

/// Checks gamma > delta > 0, lambda0 > 0, complete samples and exact
/// tau-periodicity of v_per on the box.
void validate(const GordonInput& input);

struct RhoM {
    double rho = 0.0; // max |v_per - v|
    double m = 0.0;   // max |v|
};

RhoM rho_and_m(const GordonInput& input);

struct GordonReport {
    int d = 1;
    std::vector<long long> tau;
    double gamma = 0.0;
    double lambda0 = 0.0;
    long long radius = 0;
    LogValue rho_log;                // rho_tau; log_mag = -inf when rho = 0
    double m_tau = 0.0;              // box max of |V|
    double threshold_log = 0.0;      // -(2d + gamma) tau_1...tau_d ln(2d - 1 + m_tau + lambda0)
    bool pass = false;               // rho_log < threshold_log
    double margin_log = 0.0;         // threshold_log - ln rho
    /// Bounded f only: -(2d + gamma) tau_1...tau_d ln(4d - 1 + 2 ||f||_inf) and the
    /// corresponding comparison.
    std::optional<double> bounded_threshold_log;
    std::optional<bool> bounded_pass;
    std::string label;

    double tau_product() const;
    /// Structured "key: value" text with every log-domain field.
    std::string to_text() const;
};

/// Log-domain comparison of rho against (2d - 1 + m + lambda0)^-((2d + gamma) tau_1...tau_d).
GordonReport gordon_check(const LogValue& rho, double m, int d, std::span<const long long> tau, double gamma,
                          double lambda0);
GordonReport gordon_check(double rho, double m, int d, std::span<const long long> tau, double gamma, double lambda0);

struct OrbitOptions {
    /// Defaults to 2d + ||f||_inf; required for unbounded f.
    std::optional<double> lambda0;
    std::uint64_t max_sites = 50'000'000;
    unsigned threads = 1;
};

/// V(n) = f(x + n * alpha) against the periodic approximant on the box.
///
/// A site n = m + k * tau with 0 <= m_i < tau_i sits at y + k * sigma, where
/// y = x + m * alpha and sigma_i is the signed offset of tau_i alpha_i from
/// the nearest integer. The difference f(y + k * sigma) - f(y) is taken in
/// log form, so rho stays meaningful far below double resolution.
GordonReport gordon_check_orbit(const potential::PotentialSpec& f, std::span<const double> x,
                                const freqcond::FrequencyVector& alpha, std::span<const long long> tau, double gamma,
                                double delta, const OrbitOptions& options = {});

} // namespace quasilab::gordon
