#include "quasilab/contfrac.hpp"
#include "quasilab/errors.hpp"

#include <algorithm>
#include <sstream>

namespace quasilab::contfrac {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

BigInt floor_nonneg(const BigRational& r) {
    return BigInt(numerator(r)) / BigInt(denominator(r));
}

bool is_integer(const BigRational& r) { return denominator(r) == 1; }

// ||r||_T for r >= 0.
BigRational dist_to_integers(const BigRational& r) {
    const BigRational frac = r - BigRational(floor_nonneg(r));
    const BigRational other = BigRational(1) - frac;
    return frac < other ? frac : other;
}

bool contains_integer(const BigRational& lo, const BigRational& hi) {
    return is_integer(lo) || is_integer(hi) || floor_nonneg(lo) != floor_nonneg(hi);
}

bool contains_half_integer(const BigRational& lo, const BigRational& hi) {
    BigRational half = BigRational(floor_nonneg(lo)) + BigRational(1, 2);
    if (half < lo) half += 1;
    return half <= hi;
}

std::string describe(const BigInt& x) {
    std::ostringstream out;
    out << x;
    return out.str();
}

const BigRational kHalf(1, 2);

} // namespace

// ---------------------------------------------------------------------------
// Rules

std::string QuotientRule::name() const {
    struct Visitor {
        std::string operator()(const ConstantRule& r) const { return "constant(" + describe(r.value) + ")"; }
        std::string operator()(const ArithmeticRule& r) const {
            return "arithmetic(" + describe(r.start) + "," + describe(r.step) + ")";
        }
        std::string operator()(const PeriodicRule& r) const {
            std::string s = "periodic(";
            for (std::size_t i = 0; i < r.period.size(); ++i) s += (i ? "," : "") + describe(r.period[i]);
            return s + ")";
        }
        std::string operator()(const GeometricRule& r) const { return "geometric(" + describe(r.base) + ")"; }
        std::string operator()(const DoublyExponentialRule& r) const {
            return "doubly_exponential(" + describe(r.base) + ")";
        }
        std::string operator()(const ExplicitRule& r) const {
            std::string s = "explicit[" + std::to_string(r.quotients.size()) + "]";
            if (r.tail) s += "+" + r.tail->name();
            return s;
        }
    };
    return std::visit(Visitor{}, kind);
}

std::optional<BigInt> QuotientRule::quotient(std::size_t n) const {
    if (n == 0) return std::nullopt;
    struct Visitor {
        std::size_t n;
        std::optional<BigInt> operator()(const ConstantRule& r) const { return r.value; }
        std::optional<BigInt> operator()(const ArithmeticRule& r) const {
            return r.start + r.step * BigInt(n - 1);
        }
        std::optional<BigInt> operator()(const PeriodicRule& r) const {
            if (r.period.empty()) return std::nullopt;
            return r.period[(n - 1) % r.period.size()];
        }
        std::optional<BigInt> operator()(const GeometricRule& r) const {
            return boost::multiprecision::pow(r.base, static_cast<unsigned>(n));
        }
        std::optional<BigInt> operator()(const DoublyExponentialRule& r) const {
            if (n >= 40) return std::nullopt; // 2^40-bit quotients are not materializable
            return boost::multiprecision::pow(r.base, static_cast<unsigned>(std::size_t{1} << n));
        }
        std::optional<BigInt> operator()(const ExplicitRule& r) const {
            if (n <= r.quotients.size()) return r.quotients[n - 1];
            if (r.tail) return r.tail->quotient(n - r.quotients.size());
            return std::nullopt;
        }
    };
    return std::visit(Visitor{n}, kind);
}

std::size_t QuotientRule::default_depth() const {
    return std::visit(
        [](const auto& r) -> std::size_t {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, DoublyExponentialRule>)
                return 12;
            else if constexpr (std::is_same_v<T, ExplicitRule>)
                return r.quotients.size() + (r.tail ? r.tail->default_depth() : 0);
            else
                return 200;
        },
        kind);
}

QuotientRule constant_rule(long value) { return QuotientRule{ConstantRule{BigInt(value)}}; }

QuotientRule explicit_rule(std::vector<BigInt> quotients, std::shared_ptr<const QuotientRule> tail) {
    return QuotientRule{ExplicitRule{std::move(quotients), std::move(tail)}};
}

// ---------------------------------------------------------------------------
// Frequency

Frequency::Frequency(QuotientRule rule) : Frequency(rule, rule.default_depth()) {}

Frequency::Frequency(QuotientRule rule, std::size_t precision_depth) {
    auto data = std::make_shared<Data>();
    data->rule = std::move(rule);
    for (std::size_t n = 1; n <= precision_depth; ++n) {
        auto a = data->rule.quotient(n);
        if (!a) break;
        if (*a < 1) throw InvalidArgument("partial quotient a_" + std::to_string(n) + " must be >= 1");
        data->quotients.push_back(std::move(*a));
    }
    if (data->quotients.empty()) throw InvalidArgument("frequency has no partial quotients");

    const std::size_t depth = data->quotients.size();
    data->p.resize(depth + 1);
    data->q.resize(depth + 1);
    BigInt p_prev = 1, q_prev = 0; // level -1
    data->p[0] = 0;
    data->q[0] = 1;
    for (std::size_t n = 1; n <= depth; ++n) {
        const BigInt& a = data->quotients[n - 1];
        const BigInt p = a * data->p[n - 1] + p_prev;
        const BigInt q = a * data->q[n - 1] + q_prev;
        p_prev = data->p[n - 1];
        q_prev = data->q[n - 1];
        data->p[n] = p;
        data->q[n] = q;
    }
    data->as_double = BigRational(data->p[depth], data->q[depth]).convert_to<double>();
    data_ = std::move(data);
}

Frequency Frequency::golden_mean(std::size_t depth) { return Frequency(constant_rule(1), depth); }
Frequency Frequency::silver_mean(std::size_t depth) { return Frequency(constant_rule(2), depth); }

const BigInt& Frequency::quotient(std::size_t n) const {
    if (n == 0 || n > precision_depth())
        throw InsufficientPrecision("quotient a_" + std::to_string(n) + " not materialized (depth " +
                                    std::to_string(precision_depth()) + ")");
    return data_->quotients[n - 1];
}

const BigInt& Frequency::p(std::size_t n) const {
    if (n > precision_depth()) throw InsufficientPrecision("convergent level " + std::to_string(n) + " not materialized");
    return data_->p[n];
}

const BigInt& Frequency::q(std::size_t n) const {
    if (n > precision_depth()) throw InsufficientPrecision("convergent level " + std::to_string(n) + " not materialized");
    return data_->q[n];
}

Convergent Frequency::convergent(std::size_t n) const { return {n, p(n), q(n)}; }

BigRational Frequency::convergent_value(std::size_t n) const { return BigRational(p(n), q(n)); }

BigRational Frequency::truncation_error_bound() const {
    const BigInt& qd = data_->q.back();
    return BigRational(BigInt(1), qd * qd);
}

std::vector<Convergent> convergents(const Frequency& alpha, std::size_t depth) {
    if (depth > alpha.precision_depth())
        throw InsufficientPrecision("insufficient precision: requested depth " + std::to_string(depth) +
                                    ", materialized " + std::to_string(alpha.precision_depth()));
    std::vector<Convergent> out;
    out.reserve(depth);
    for (std::size_t n = 1; n <= depth; ++n) out.push_back(alpha.convergent(n));
    return out;
}

// ---------------------------------------------------------------------------
// ||k alpha||

double TorusInterval::midpoint() const { return to_double((lower + upper) / 2); }

LevelEnclosure torus_dist_at_level(const BigInt& k, const Frequency& alpha, std::size_t level) {
    if (k < 1) throw InvalidArgument("torus_dist: k must be positive");
    if (level == 0 || level + 1 > alpha.precision_depth())
        throw InsufficientPrecision("insufficient precision: bracket at level " + std::to_string(level) +
                                    " needs depth " + std::to_string(level + 1));
    BigRational a = BigRational(k * alpha.p(level), alpha.q(level));
    BigRational b = BigRational(k * alpha.p(level + 1), alpha.q(level + 1));
    if (b < a) std::swap(a, b);

    const BigRational da = dist_to_integers(a);
    const BigRational db = dist_to_integers(b);
    LevelEnclosure out;
    out.interval.level = level;
    out.interval.lower = da < db ? da : db;
    out.interval.upper = da < db ? db : da;
    if (contains_half_integer(a, b)) out.interval.upper = kHalf;
    out.decided = !contains_integer(a, b);
    if (!out.decided) out.interval.lower = 0;
    return out;
}

TorusInterval torus_dist(const BigInt& k, const Frequency& alpha, const BigRational& tolerance) {
    if (tolerance <= 0) throw InvalidArgument("torus_dist: tolerance must be positive");
    for (std::size_t n = 1; n + 1 <= alpha.precision_depth(); ++n) {
        const BigRational width(k, alpha.q(n) * alpha.q(n + 1));
        if (width > tolerance) continue;
        auto enc = torus_dist_at_level(k, alpha, n);
        if (enc.decided) return enc.interval;
    }
    throw InsufficientPrecision("insufficient precision: cannot enclose ||k alpha|| for " + alpha.name() +
                                " at depth " + std::to_string(alpha.precision_depth()));
}

TorusInterval torus_dist(const BigInt& k, const Frequency& alpha, double tolerance) {
    return torus_dist(k, alpha, to_rational(tolerance));
}

TorusInterval torus_dist(const BigInt& k, const BigRational& x) {
    if (k < 1) throw InvalidArgument("torus_dist: k must be positive");
    BigRational kx = BigRational(k) * x;
    // shift into [0, inf) before reducing
    if (kx < 0) kx += BigRational(BigInt(-floor_nonneg(-kx)) + 1);
    const BigRational d = dist_to_integers(kx);
    return {d, d, 0};
}

LogValue log_signed_offset(const BigInt& k, const Frequency& alpha, double rel_tol) {
    const BigRational rel = to_rational(rel_tol);
    for (std::size_t n = 1; n + 1 <= alpha.precision_depth(); ++n) {
        BigRational a = BigRational(k * alpha.p(n), alpha.q(n));
        BigRational b = BigRational(k * alpha.p(n + 1), alpha.q(n + 1));
        if (b < a) std::swap(a, b);
        if (contains_integer(a, b) || contains_half_integer(a, b)) continue;
        const BigRational base(floor_nonneg(a));
        BigRational lo = a - base, hi = b - base;
        int sign = 1;
        if (lo > kHalf) {
            lo = BigRational(1) - lo;
            hi = BigRational(1) - hi;
            std::swap(lo, hi);
            sign = -1;
        }
        if (hi - lo > rel * lo) continue;
        return LogValue::from_log(sign, log_abs(BigRational((lo + hi) / 2)));
    }
    throw InsufficientPrecision("insufficient precision: cannot resolve k alpha - round(k alpha) for " +
                                alpha.name());
}

double signed_offset(const BigInt& k, const Frequency& alpha) {
    return log_signed_offset(k, alpha).to_double();
}

// ---------------------------------------------------------------------------

BoundedTypeEvidence is_bounded_type(const Frequency& alpha, std::size_t depth) {
    if (depth == 0) throw InvalidArgument("is_bounded_type: depth must be positive");
    if (depth > alpha.precision_depth())
        throw InsufficientPrecision("insufficient precision: depth " + std::to_string(depth) +
                                    " exceeds materialized " + std::to_string(alpha.precision_depth()));
    BoundedTypeEvidence out;
    out.depth = depth;
    BigInt first_half_max = 0;
    const std::size_t half = (depth + 1) / 2;
    for (std::size_t n = 1; n <= depth; ++n) {
        const BigInt& a = alpha.quotient(n);
        if (a > out.max_quotient) out.max_quotient = a;
        if (n == half) first_half_max = out.max_quotient;
    }
    out.bounded_evidence = out.max_quotient == first_half_max;
    return out;
}

bool best_approx_verify_denominator(const Frequency& alpha, const BigInt& denominator) {
    if (denominator < 1) throw InvalidArgument("best_approx_verify: denominator must be positive");
    if (denominator > 100000) throw InvalidArgument("best_approx_verify: denominator exceeds brute-force guard 1e5");
    const auto count = denominator.convert_to<long long>();
    if (count == 1) return true;

    // Bracket widths ~ q / (q_L q_{L+1}) must sit well below the gaps between
    // distinct ||k alpha|| values, which are >= ~1 / (C q).
    const BigInt needed = BigInt(1000) * denominator * denominator * denominator;
    std::size_t level = 1;
    while (level + 1 < alpha.precision_depth() && alpha.q(level) * alpha.q(level + 1) < needed) ++level;

    for (; level + 1 <= alpha.precision_depth(); ++level) {
        const auto target = torus_dist_at_level(denominator, alpha, level);
        if (!target.decided) continue;
        bool all_separated = true;
        for (long long k = 1; k < count; ++k) {
            const auto enc = torus_dist_at_level(BigInt(k), alpha, level);
            if (enc.decided && enc.interval.upper < target.interval.lower) return false;
            if (!(enc.interval.lower >= target.interval.upper)) all_separated = false;
        }
        if (all_separated) return true;
    }
    throw ToleranceTooCoarse("tolerance too coarse: cannot separate ||k alpha|| values for q = " +
                             describe(denominator));
}

bool best_approx_verify(const Frequency& alpha, std::size_t n) {
    return best_approx_verify_denominator(alpha, alpha.q(n));
}

SandwichCheck sandwich_check(const Frequency& alpha, std::size_t n) {
    if (n == 0) throw InvalidArgument("sandwich_check: level must be >= 1");
    const BigInt& q_next = alpha.q(n + 1);
    const BigRational inv(BigInt(1), q_next);
    const BigRational bounds[4] = {inv, 2 * inv, inv / 2, inv}; // literal lo/hi, classical lo/hi

    BigRational tolerance = inv;
    for (int attempt = 0; attempt < 64; ++attempt) {
        tolerance /= BigRational(BigInt(1) << 20);
        TorusInterval value;
        try {
            value = torus_dist(alpha.q(n), alpha, tolerance);
        } catch (const InsufficientPrecision&) {
            break;
        }
        // lower-type bound B <= v: decided when B <= v.lower or B > v.upper.
        auto lower_decided = [&](const BigRational& b) { return b <= value.lower || b > value.upper; };
        auto upper_decided = [&](const BigRational& b) { return b >= value.upper || b < value.lower; };
        if (!lower_decided(bounds[0]) || !upper_decided(bounds[1]) || !lower_decided(bounds[2]) ||
            !upper_decided(bounds[3]))
            continue;
        SandwichCheck out;
        out.value = value;
        out.literal_lower = bounds[0] <= value.lower;
        out.literal_upper = value.upper <= bounds[1];
        out.classical_lower = bounds[2] <= value.lower;
        out.classical_upper = value.upper <= bounds[3];
        return out;
    }
    throw ToleranceTooCoarse("tolerance too coarse: sandwich at level " + std::to_string(n) +
                             " undecidable at depth " + std::to_string(alpha.precision_depth()));
}

} // namespace quasilab::contfrac
