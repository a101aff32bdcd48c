#include "quasilab/bigint.hpp"
#include "quasilab/errors.hpp"

#include <gmp.h>

#include <cmath>
#include <numbers>

namespace quasilab {

double log_abs(const BigInt& x) {
    if (x == 0) throw InvalidArgument("log_abs: zero argument");
    long exponent = 0;
    const double mantissa = mpz_get_d_2exp(&exponent, x.backend().data());
    return std::log(std::fabs(mantissa)) + static_cast<double>(exponent) * std::numbers::ln2;
}

double log_abs(const BigRational& x) {
    return log_abs(BigInt(boost::multiprecision::numerator(x))) -
           log_abs(BigInt(boost::multiprecision::denominator(x)));
}

BigRational to_rational(double x) {
    if (!std::isfinite(x)) throw InvalidArgument("to_rational: non-finite value");
    if (x == 0.0) return BigRational(0);
    int exponent = 0;
    const double mantissa = std::frexp(x, &exponent);
    // 53-bit integer mantissa, then scale by a power of two.
    const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
    exponent -= 53;
    BigRational value(scaled);
    BigInt power = 1;
    power <<= static_cast<unsigned>(std::abs(exponent));
    if (exponent >= 0)
        value *= power;
    else
        value /= power;
    return value;
}

BigInt parse_big_int(const std::string& text) {
    const auto caret = text.find('^');
    try {
        if (caret == std::string::npos) {
            BigInt value(text);
            if (value < 0) throw InvalidArgument("negative integer: " + text);
            return value;
        }
        const BigInt base(text.substr(0, caret));
        const unsigned long exponent = std::stoul(text.substr(caret + 1));
        if (base < 0) throw InvalidArgument("negative base: " + text);
        return boost::multiprecision::pow(base, static_cast<unsigned>(exponent));
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const Error*>(&e)) throw;
        throw InvalidArgument("malformed integer '" + text + "'");
    } catch (const std::logic_error&) {
        throw InvalidArgument("malformed integer '" + text + "'");
    }
}

} // namespace quasilab
