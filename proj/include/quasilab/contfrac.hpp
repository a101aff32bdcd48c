#pragma once

#include "quasilab/bigint.hpp"
#include "quasilab/log_value.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace quasilab::contfrac {

// Partial-quotient generator rules. Quotients are 1-based: a_1, a_2, ...
// and alpha = [0; a_1, a_2, ...] lies in (0, 1).

/// a_n = value
struct ConstantRule {
    BigInt value;
};

/// a_n = start + step * (n - 1)
struct ArithmeticRule {
    BigInt start;
    BigInt step;
};

/// a_n = period[(n - 1) mod period.size()]
struct PeriodicRule {
    std::vector<BigInt> period;
};

/// a_n = base^n
struct GeometricRule {
    BigInt base;
};

/// a_n = base^(2^n)
struct DoublyExponentialRule {
    BigInt base;
};

struct QuotientRule;

/// Listed quotients first, then `tail` (re-indexed from 1) if present.
struct ExplicitRule {
    std::vector<BigInt> quotients;
    std::shared_ptr<const QuotientRule> tail;
};

struct QuotientRule {
    std::variant<ConstantRule, ArithmeticRule, PeriodicRule, GeometricRule,
                 DoublyExponentialRule, ExplicitRule>
        kind;

    std::string name() const;
    /// a_n, or nullopt when the rule has no quotient at index n.
    std::optional<BigInt> quotient(std::size_t n) const;
    /// Depth materialized when the caller does not ask for one.
    std::size_t default_depth() const;
};

QuotientRule constant_rule(long value);
QuotientRule explicit_rule(std::vector<BigInt> quotients,
                           std::shared_ptr<const QuotientRule> tail = nullptr);

/// p_n / q_n, the n-th convergent of [0; a_1, a_2, ...].
struct Convergent {
    std::size_t n = 0;
    BigInt p;
    BigInt q;
};

/// An irrational in (0, 1) given by its partial quotients, with exact
/// convergents materialized up to precision_depth().
///
/// Seed: p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1, so p_1 = 1, q_1 = a_1 and
/// q_n = a_n q_{n-1} + q_{n-2}. With this seed
/// p_{n+1} q_n - p_n q_{n+1} = (-1)^n for n >= 0.
///
/// Immutable; copies share storage.
class Frequency {
public:
    Frequency(QuotientRule rule, std::size_t precision_depth);
    explicit Frequency(QuotientRule rule);

    static Frequency golden_mean(std::size_t depth = 200);
    static Frequency silver_mean(std::size_t depth = 200);

    const QuotientRule& rule() const { return data_->rule; }
    std::string name() const { return data_->rule.name(); }
    std::size_t precision_depth() const { return data_->quotients.size(); }

    /// 1 <= n <= precision_depth()
    const BigInt& quotient(std::size_t n) const;
    /// 0 <= n <= precision_depth()
    const BigInt& p(std::size_t n) const;
    const BigInt& q(std::size_t n) const;
    Convergent convergent(std::size_t n) const;
    BigRational convergent_value(std::size_t n) const;

    /// Nearest double to the deepest convergent.
    double to_double() const { return data_->as_double; }
    /// Upper bound on |alpha - p_D/q_D| for D = precision_depth().
    BigRational truncation_error_bound() const;

private:
    struct Data {
        QuotientRule rule;
        std::vector<BigInt> quotients; // a_1..a_D at index 0..D-1
        std::vector<BigInt> p;         // p_0..p_D
        std::vector<BigInt> q;         // q_0..q_D
        double as_double = 0.0;
    };
    std::shared_ptr<const Data> data_;
};

/// Convergents at levels 1..depth. Throws InsufficientPrecision when depth
/// exceeds the materialized quotients.
std::vector<Convergent> convergents(const Frequency& alpha, std::size_t depth);

/// Guaranteed enclosure [lower, upper] of ||k alpha||_T.
struct TorusInterval {
    BigRational lower;
    BigRational upper;
    std::size_t level = 0; // convergent level whose bracket produced it; 0 if exact

    BigRational width() const { return upper - lower; }
    bool contains(const BigRational& x) const { return lower <= x && x <= upper; }
    double midpoint() const;
};

/// Enclosure obtained from the bracket p_level/q_level, p_{level+1}/q_{level+1}
/// around alpha. `decided` is false when the bracket for k*alpha straddles an
/// integer, in which case the lower bound is 0.
struct LevelEnclosure {
    TorusInterval interval;
    bool decided = false;
};
LevelEnclosure torus_dist_at_level(const BigInt& k, const Frequency& alpha, std::size_t level);

/// ||k alpha||_T to within `tolerance` (interval width). The bracket error at
/// level n is k / (q_n q_{n+1}); the shallowest sufficient level is used.
TorusInterval torus_dist(const BigInt& k, const Frequency& alpha, const BigRational& tolerance);
TorusInterval torus_dist(const BigInt& k, const Frequency& alpha, double tolerance);

/// Exact ||k x||_T for a rational x (zero-width interval). Test stub for
/// checks that need a rational in place of a Frequency.
TorusInterval torus_dist(const BigInt& k, const BigRational& x);

/// k alpha - round(k alpha) in log form, with relative accuracy rel_tol.
LogValue log_signed_offset(const BigInt& k, const Frequency& alpha, double rel_tol = 1e-12);
/// Same value as a double (may underflow to 0).
double signed_offset(const BigInt& k, const Frequency& alpha);

/// Finite-depth evidence about bounded type. `bounded_evidence` is set when
/// no new record quotient appears in the second half of the scanned range;
/// this is never a proof either way.
struct BoundedTypeEvidence {
    bool bounded_evidence = false;
    BigInt max_quotient;
    std::size_t depth = 0;
};
BoundedTypeEvidence is_bounded_type(const Frequency& alpha, std::size_t depth);

/// Brute-force check of ||q_n alpha|| <= ||k alpha|| for 1 <= k < q_n.
/// Throws ToleranceTooCoarse if some comparison cannot be separated at the
/// materialized depth, InvalidArgument if q_n exceeds 1e5.
bool best_approx_verify(const Frequency& alpha, std::size_t n);
/// Same check for an arbitrary candidate denominator.
bool best_approx_verify_denominator(const Frequency& alpha, const BigInt& denominator);

/// Two-sided bounds on ||q_n alpha|| in terms of q_{n+1}.
/// `literal`: 1/q_{n+1} <= ||q_n alpha|| <= 2/q_{n+1}
/// `classical`: 1/(2 q_{n+1}) <= ||q_n alpha|| <= 1/q_{n+1}
struct SandwichCheck {
    bool literal_lower = false;
    bool literal_upper = false;
    bool classical_lower = false;
    bool classical_upper = false;
    TorusInterval value;

    bool literal() const { return literal_lower && literal_upper; }
    bool classical() const { return classical_lower && classical_upper; }
};
SandwichCheck sandwich_check(const Frequency& alpha, std::size_t n);

} // namespace quasilab::contfrac
