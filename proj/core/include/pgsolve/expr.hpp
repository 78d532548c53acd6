#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgsolve/rational.hpp"

namespace pg::expr {

// Probability with which `player` plays `action`.
struct ProbVar {
  int player = 0;
  std::string action;

  friend bool operator==(const ProbVar&, const ProbVar&) = default;
  friend std::strong_ordering operator<=>(const ProbVar& a, const ProbVar& b) {
    if (auto c = a.player <=> b.player; c != 0) return c;
    return a.action.compare(b.action) <=> 0;
  }
};

// Product of variables with positive exponents, sorted by variable.
class Monomial {
 public:
  using Factor = std::pair<ProbVar, unsigned>;

  Monomial() = default;
  explicit Monomial(ProbVar v, unsigned exponent = 1);

  const std::vector<Factor>& factors() const { return factors_; }
  bool is_unit() const { return factors_.empty(); }
  unsigned degree() const;
  unsigned exponent(const ProbVar& v) const;

  Monomial operator*(const Monomial& other) const;
  // Removes the factor v, returning its exponent.
  std::pair<Monomial, unsigned> split(const ProbVar& v) const;

  friend bool operator==(const Monomial&, const Monomial&) = default;
  friend bool operator<(const Monomial& a, const Monomial& b);

 private:
  std::vector<Factor> factors_;
};

class PolyExpr {
 public:
  using Terms = std::map<Monomial, Rational>;

  PolyExpr() = default;
  PolyExpr(const Rational& c);  // NOLINT: constants convert implicitly
  PolyExpr(int c) : PolyExpr(Rational(c)) {}
  static PolyExpr variable(const ProbVar& v);
  static PolyExpr from_terms(Terms terms);

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_term() const;
  unsigned degree() const;
  std::set<ProbVar> variables() const;

  PolyExpr& operator+=(const PolyExpr& o);
  PolyExpr& operator-=(const PolyExpr& o);
  PolyExpr& operator*=(const PolyExpr& o);
  friend PolyExpr operator+(PolyExpr a, const PolyExpr& b) { return a += b; }
  friend PolyExpr operator-(PolyExpr a, const PolyExpr& b) { return a -= b; }
  friend PolyExpr operator*(const PolyExpr& a, const PolyExpr& b);
  friend PolyExpr operator-(const PolyExpr& a);
  friend bool operator==(const PolyExpr&, const PolyExpr&) = default;

 private:
  void add_term(const Monomial& m, const Rational& c);
  Terms terms_;
};

enum class ParseErrorKind { UnknownVariable, SyntaxError, NonPolynomial };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t position, std::string detail);
  ParseErrorKind kind() const { return kind_; }
  // 0-based character offset into the parsed text.
  std::size_t position() const { return position_; }
  const std::string& detail() const { return detail_; }

 private:
  ParseErrorKind kind_;
  std::size_t position_;
  std::string detail_;
};

class MissingAssignment : public std::runtime_error {
 public:
  explicit MissingAssignment(ProbVar v);
  const ProbVar& var() const { return var_; }

 private:
  ProbVar var_;
};

using Assignment = std::map<ProbVar, Rational>;

// Identifiers resolve to rational constants first, then to vocab actions.
PolyExpr parse_expr(std::string_view text, const std::set<ProbVar>& vocab,
                    const std::map<std::string, Rational>& constants = {});

Rational eval_expr(const PolyExpr& e, const Assignment& assignment);
PolyExpr grad_expr(const PolyExpr& e, const ProbVar& var);
PolyExpr substitute(const PolyExpr& e, const Assignment& bindings);
// Replaces variables by polynomials; unbound variables stay.
PolyExpr compose(const PolyExpr& e, const std::map<ProbVar, PolyExpr>& bindings);

// Canonical text: terms ordered as stored, action names as identifiers.
std::string to_string(const PolyExpr& e);

// Floating-point form indexed by dense variable positions.
class CompiledPoly {
 public:
  CompiledPoly() = default;
  // index_of returns the dense position of every variable in e.
  CompiledPoly(const PolyExpr& e, const std::function<int(const ProbVar&)>& index_of);

  double eval(std::span<const double> x) const;
  // Value plus gradient accumulated into grad (resized to dim).
  double eval_grad(std::span<const double> x, std::vector<double>& grad, std::size_t dim) const;
  // Conservative range over the box lo <= x <= hi with 0 <= lo.
  std::pair<double, double> range(std::span<const double> lo, std::span<const double> hi) const;

  bool empty() const { return terms_.empty(); }
  double constant() const { return constant_; }

 private:
  struct Term {
    double coef;
    std::vector<std::pair<int, unsigned>> factors;
  };
  double constant_ = 0.0;
  std::vector<Term> terms_;
};

}  // namespace pg::expr
