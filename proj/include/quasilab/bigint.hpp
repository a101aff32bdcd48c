#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string>

namespace quasilab {

using BigInt = boost::multiprecision::mpz_int;
using BigRational = boost::multiprecision::mpq_rational;

/// Natural logarithm of |x|; x must be nonzero. Exact exponent, double mantissa.
double log_abs(const BigInt& x);
double log_abs(const BigRational& x);

/// Exact rational value of a finite double.
BigRational to_rational(double x);

/// Parses a decimal integer or a power expression "b^e" (both nonnegative).
BigInt parse_big_int(const std::string& text);

inline double to_double(const BigRational& x) { return x.convert_to<double>(); }

} // namespace quasilab
