#include "quasilab/log_value.hpp"

#include <algorithm>

namespace quasilab {

LogValue LogValue::from_log(int sign, double log_mag) {
    if (sign == 0 || log_mag == -std::numeric_limits<double>::infinity()) return zero();
    return {sign > 0 ? 1 : -1, log_mag};
}

LogValue LogValue::from_double(double x) {
    if (x == 0.0) return zero();
    return {x > 0 ? 1 : -1, std::log(std::fabs(x))};
}

double LogValue::to_double() const {
    if (is_zero()) return 0.0;
    return sign * std::exp(log_mag);
}

LogValue operator*(const LogValue& a, const LogValue& b) {
    if (a.is_zero() || b.is_zero()) return LogValue::zero();
    return {a.sign * b.sign, a.log_mag + b.log_mag};
}

LogValue operator/(const LogValue& a, const LogValue& b) {
    if (b.is_zero()) return {a.sign == 0 ? 1 : a.sign, std::numeric_limits<double>::infinity()};
    if (a.is_zero()) return LogValue::zero();
    return {a.sign * b.sign, a.log_mag - b.log_mag};
}

LogValue operator+(const LogValue& a, const LogValue& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const LogValue& big = a.log_mag >= b.log_mag ? a : b;
    const LogValue& small = a.log_mag >= b.log_mag ? b : a;
    const double ratio = std::exp(small.log_mag - big.log_mag);
    if (big.sign == small.sign) return {big.sign, big.log_mag + std::log1p(ratio)};
    if (ratio == 1.0) return LogValue::zero();
    return {big.sign, big.log_mag + std::log1p(-ratio)};
}

bool operator<(const LogValue& a, const LogValue& b) {
    if (a.sign != b.sign) return a.sign < b.sign;
    if (a.sign == 0) return false;
    return a.sign > 0 ? a.log_mag < b.log_mag : a.log_mag > b.log_mag;
}

} // namespace quasilab
