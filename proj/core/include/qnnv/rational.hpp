#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace qnnv {

// Arbitrary-precision values used on every exact path (inference checks,
// constraint coefficients, LP relaxation).
using Integer = mpz_class;
using Rational = mpq_class;

// Parses "12", "-0.616", "3/16" or "1e-3" into an exact rational.
// Throws std::invalid_argument on malformed text.
Rational parse_rational(std::string_view text);

Integer floor_of(const Rational& q);
Integer ceil_of(const Rational& q);

// Power of two as an exact rational; negative exponents allowed.
Rational pow2(int exponent);

// Narrowing with a range check; throws std::overflow_error.
int64_t to_int64(const Integer& z);

std::string to_string(const Rational& q);
std::string to_string(const Integer& z);

}  // namespace qnnv
