#pragma once

#include "quasilab/contfrac.hpp"
#include "quasilab/montecarlo.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace quasilab::freqcond {

using contfrac::Frequency;

/// alpha = (alpha_1, ..., alpha_d), d >= 1.
class FrequencyVector {
public:
    explicit FrequencyVector(std::vector<Frequency> components);

    std::size_t dimension() const { return components_.size(); }
    const Frequency& operator[](std::size_t i) const { return components_[i]; }
    auto begin() const { return components_.begin(); }
    auto end() const { return components_.end(); }
    std::vector<double> to_doubles() const;

private:
    std::vector<Frequency> components_;
};

/// tau with an enclosure of max_i (tau_1...tau_d / tau_i) ||tau_i alpha_i||.
struct TauCandidate {
    std::vector<BigInt> tau;
    BigRational score_lower;
    BigRational score_upper;

    double score() const { return to_double(score_upper); }
};

struct SearchBudget {
    /// Convergent levels 1..depth per component.
    std::size_t depth = 25;
    /// Opt-in validation mode: every integer 1..max_integer per component.
    bool full_integer = false;
    std::uint64_t max_integer = 0;
    /// Refuse searches with more tau vectors than this.
    std::uint64_t max_candidates = 50'000'000;
};

/// Either a certified candidate (score_upper < target) or an exhaustion
/// report. Exhaustion is evidence only; it never claims nonexistence.
struct SearchResult {
    bool found = false;
    std::optional<TauCandidate> candidate; // lexicographically first with score < target
    TauCandidate best;                     // smallest score_upper seen (lexicographic ties)
    std::uint64_t examined = 0;
    std::vector<std::size_t> levels_searched; // per component
};

/// Score enclosure for one tau vector, with relative accuracy ~rel_tol when
/// the materialized depth allows.
TauCandidate score_tau(const FrequencyVector& alpha, std::span<const BigInt> tau, double rel_tol = 0x1p-40);

SearchResult generic_seq_search(const FrequencyVector& alpha, double target, const SearchBudget& budget = {});

struct InterleaveResult {
    bool found = false;
    std::size_t n = 0; // level for alpha1
    std::size_t m = 0; // level for alpha2
    /// q2_m / q1_{n+1} and q1_n / q2_{m+1} at (n, m), or at the best pair when not found.
    BigRational ratio_a;
    BigRational ratio_b;
    double best_max_ratio = 0.0;
};

/// First (n, m) in lexicographic order with
/// max(q2_m / q1_{n+1}, q1_n / q2_{m+1}) < epsilon, by exact integer comparison.
InterleaveResult d2_interleave(const Frequency& alpha1, const Frequency& alpha2, double epsilon, std::size_t depth);

/// (2 eps)^d / (m_1...m_d)^(d-1); throws FormulaRegimeViolated when some
/// strip half-width eps * m_i / (m_1...m_d) exceeds 1/2.
double aeps_closed_form(std::span<const long long> m, double epsilon);

struct AepsMeasure {
    double closed_form = 0.0;
    mc::MeasureEstimate mc;
};

/// Closed form plus the sampled measure of
/// {alpha in T^d : max_i (m_1...m_d / m_i) ||m_i alpha_i|| < eps}.
AepsMeasure aeps_measure(std::span<const long long> m, double epsilon, const mc::Params& params);

struct AepsSeries {
    int d = 0;
    double epsilon = 0.0;
    std::uint64_t cutoff = 0;
    double partial_sum = 0.0;
    /// d >= 3: upper bound on (full sum - partial_sum) by integral comparison.
    std::optional<double> tail_bound;
    /// d <= 2: the full series diverges.
    bool divergent = false;
};

/// (2 eps)^d (sum_{m <= cutoff} m^-(d-1))^d
AepsSeries aeps_series(double epsilon, int d, std::uint64_t cutoff);

} // namespace quasilab::freqcond
