#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace pg {

using Rational = mpq_class;

// Accepts "3", "-3/4", "0.125", "1e-3" style literals; decimals convert exactly.
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& q);

// Canonical n/d.
inline Rational ratio(long n, long d) {
  Rational q(n, d);
  q.canonicalize();
  return q;
}

inline double to_double(const Rational& q) { return q.get_d(); }

// Exact rational value of a finite double.
Rational from_double(double x);

}  // namespace pg
