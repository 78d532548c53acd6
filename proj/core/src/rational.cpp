#include "pgsolve/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace pg {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto bad = [&] { return std::invalid_argument("not a rational literal: '" + std::string(text) + "'"); };

  Rational out;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw bad();
    mpz_class d(std::string(den), 10);
    if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    out = Rational(mpz_class(std::string(num), 10), d);
    out.canonicalize();
  } else {
    std::string_view mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      mant = s.substr(0, e);
      auto ex = s.substr(e + 1);
      bool eneg = false;
      if (!ex.empty() && (ex.front() == '-' || ex.front() == '+')) {
        eneg = ex.front() == '-';
        ex.remove_prefix(1);
      }
      if (!all_digits(ex) || ex.size() > 6) throw bad();
      exp10 = std::stol(std::string(ex)) * (eneg ? -1 : 1);
    }
    std::string digits;
    auto dot = mant.find('.');
    if (dot == std::string_view::npos) {
      if (!all_digits(mant)) throw bad();
      digits = std::string(mant);
    } else {
      auto ip = mant.substr(0, dot), fp = mant.substr(dot + 1);
      if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
        throw bad();
      digits = std::string(ip) + std::string(fp);
      exp10 -= static_cast<long>(fp.size());
    }
    mpz_class num(digits, 10), scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    out = exp10 >= 0 ? Rational(num * scale) : Rational(num, scale);
    out.canonicalize();
  }
  return negative ? Rational(-out) : out;
}

std::string to_string(const Rational& q) { return q.get_str(); }

Rational from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
  Rational q(x);
  q.canonicalize();
  return q;
}

}  // namespace pg
