#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace pcw {

// Exact arbitrary-precision rational. Every probability, error bound and
// verdict in the workbench is computed with this type.
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

// "n/d" with d omitted when it is 1.
std::string to_exact_string(const Rational& r);

// Decimal rendering rounded to `digits` significant decimals; display only.
std::string to_decimal_string(const Rational& r, int digits = 12);

// Accepts "n", "n/d" and "-n/d"; throws std::invalid_argument otherwise.
Rational parse_rational(std::string_view text);

// base^exp for a non-negative exponent.
Rational pow(const Rational& base, std::uint64_t exp);

inline bool is_probability(const Rational& r) { return r >= 0 && r <= 1; }

}  // namespace pcw
