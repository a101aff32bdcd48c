#pragma once

#include <cmath>
#include <limits>

namespace quasilab {

/// Signed real stored as (sign, ln|x|). Zero is sign 0 with log_mag = -inf.
///
/// Products and quotients are exact in the log; sums use a signed
/// log-sum-exp and lose only the usual floating relative error, so values
/// far below the double range (e^-10^6 and smaller) compare correctly.
struct LogValue {
    int sign = 0;
    double log_mag = -std::numeric_limits<double>::infinity();

    static LogValue zero() { return {}; }
    static LogValue from_log(int sign, double log_mag);
    static LogValue from_double(double x);

    bool is_zero() const { return sign == 0; }
    /// May underflow to 0 or overflow to inf.
    double to_double() const;
    LogValue abs() const { return is_zero() ? zero() : LogValue{1, log_mag}; }
    LogValue operator-() const { return {-sign, log_mag}; }

    friend LogValue operator*(const LogValue& a, const LogValue& b);
    friend LogValue operator/(const LogValue& a, const LogValue& b);
    friend LogValue operator+(const LogValue& a, const LogValue& b);
    friend LogValue operator-(const LogValue& a, const LogValue& b) { return a + (-b); }
    friend bool operator<(const LogValue& a, const LogValue& b);
    friend bool operator>(const LogValue& a, const LogValue& b) { return b < a; }
    friend bool operator==(const LogValue& a, const LogValue& b) = default;
};

inline LogValue max_abs(const LogValue& a, const LogValue& b) {
    return a.abs() < b.abs() ? b.abs() : a.abs();
}

} // namespace quasilab
