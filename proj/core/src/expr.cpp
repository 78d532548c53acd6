#include "pgsolve/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace pg::expr {

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(ProbVar v, unsigned exponent) {
  if (exponent > 0) factors_.emplace_back(std::move(v), exponent);
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (const auto& [v, e] : factors_) d += e;
  return d;
}

unsigned Monomial::exponent(const ProbVar& v) const {
  for (const auto& [w, e] : factors_)
    if (w == v) return e;
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  auto a = factors_.begin(), b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->first < a->first) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  return out;
}

std::pair<Monomial, unsigned> Monomial::split(const ProbVar& v) const {
  Monomial rest;
  unsigned e = 0;
  for (const auto& f : factors_) {
    if (f.first == v)
      e = f.second;
    else
      rest.factors_.push_back(f);
  }
  return {std::move(rest), e};
}

bool operator<(const Monomial& a, const Monomial& b) {
  return std::lexicographical_compare(a.factors_.begin(), a.factors_.end(), b.factors_.begin(),
                                      b.factors_.end(), [](const auto& x, const auto& y) {
                                        if (x.first != y.first) return x.first < y.first;
                                        return x.second > y.second;
                                      });
}

// ---------------------------------------------------------------- PolyExpr

PolyExpr::PolyExpr(const Rational& c) {
  if (c != 0) terms_.emplace(Monomial{}, c);
}

PolyExpr PolyExpr::variable(const ProbVar& v) {
  PolyExpr p;
  p.terms_.emplace(Monomial(v), Rational(1));
  return p;
}

PolyExpr PolyExpr::from_terms(Terms terms) {
  PolyExpr p;
  for (auto& [m, c] : terms)
    if (c != 0) p.terms_.emplace(m, c);
  return p;
}

bool PolyExpr::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_unit());
}

Rational PolyExpr::constant_term() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rational(0) : it->second;
}

unsigned PolyExpr::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

std::set<ProbVar> PolyExpr::variables() const {
  std::set<ProbVar> out;
  for (const auto& [m, c] : terms_)
    for (const auto& [v, e] : m.factors()) out.insert(v);
  return out;
}

void PolyExpr::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

PolyExpr& PolyExpr::operator+=(const PolyExpr& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

PolyExpr& PolyExpr::operator-=(const PolyExpr& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, Rational(-c));
  return *this;
}

PolyExpr& PolyExpr::operator*=(const PolyExpr& o) {
  *this = *this * o;
  return *this;
}

PolyExpr operator*(const PolyExpr& a, const PolyExpr& b) {
  PolyExpr out;
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, Rational(ca * cb));
  return out;
}

PolyExpr operator-(const PolyExpr& a) {
  PolyExpr out;
  for (const auto& [m, c] : a.terms_) out.terms_.emplace(m, Rational(-c));
  return out;
}

// ---------------------------------------------------------------- errors

namespace {

std::string kind_name(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::UnknownVariable: return "unknown variable";
    case ParseErrorKind::SyntaxError: return "syntax error";
    case ParseErrorKind::NonPolynomial: return "non-polynomial expression";
  }
  return "parse error";
}

std::string describe(ParseErrorKind kind, std::size_t position, const std::string& detail) {
  std::ostringstream out;
  out << kind_name(kind) << " at offset " << position << ": " << detail;
  return out.str();
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, std::size_t position, std::string detail)
    : std::runtime_error(describe(kind, position, detail)),
      kind_(kind),
      position_(position),
      detail_(std::move(detail)) {}

MissingAssignment::MissingAssignment(ProbVar v)
    : std::runtime_error("no value assigned to '" + v.action + "'"), var_(std::move(v)) {}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::set<ProbVar>& vocab,
         const std::map<std::string, Rational>& constants)
      : text_(text), constants_(constants) {
    for (const auto& v : vocab) vocab_.emplace(v.action, v);
  }

  PolyExpr run() {
    PolyExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail(ParseErrorKind::SyntaxError, "unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(ParseErrorKind k, std::string msg) const { throw ParseError(k, pos_, std::move(msg)); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  PolyExpr expr() {
    PolyExpr acc = term();
    for (;;) {
      if (eat('+'))
        acc += term();
      else if (eat('-'))
        acc -= term();
      else
        return acc;
    }
  }

  PolyExpr term() {
    PolyExpr acc = unary();
    for (;;) {
      if (eat('*')) {
        acc *= unary();
      } else if (eat('/')) {
        std::size_t at = pos_;
        PolyExpr d = unary();
        if (!d.is_constant()) throw ParseError(ParseErrorKind::NonPolynomial, at, "division by a variable");
        Rational c = d.constant_term();
        if (c == 0) throw ParseError(ParseErrorKind::NonPolynomial, at, "division by zero");
        acc *= PolyExpr(Rational(1 / c));
      } else {
        return acc;
      }
    }
  }

  PolyExpr unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  PolyExpr power() {
    PolyExpr base = primary();
    if (!eat('^')) return base;
    skip_ws();
    std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
    if (end == pos_ || (end < text_.size() && (text_[end] == '.' || std::isalpha(static_cast<unsigned char>(text_[end])))))
      throw ParseError(ParseErrorKind::NonPolynomial, at, "exponent must be a nonnegative integer literal");
    if (end - pos_ > 3) throw ParseError(ParseErrorKind::NonPolynomial, at, "exponent too large");
    unsigned n = static_cast<unsigned>(std::stoul(std::string(text_.substr(pos_, end - pos_))));
    pos_ = end;
    PolyExpr out(1);
    for (unsigned i = 0; i < n; ++i) out *= base;
    return out;
  }

  PolyExpr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail(ParseErrorKind::SyntaxError, "unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      PolyExpr e = expr();
      if (!eat(')')) fail(ParseErrorKind::SyntaxError, "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (auto it = constants_.find(name); it != constants_.end()) return PolyExpr(it->second);
      if (auto it = vocab_.find(name); it != vocab_.end()) return PolyExpr::variable(it->second);
      throw ParseError(ParseErrorKind::UnknownVariable, start, name);
    }
    fail(ParseErrorKind::SyntaxError, "unexpected '" + std::string(1, c) + "'");
  }

  PolyExpr number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    try {
      return PolyExpr(parse_rational(text_.substr(start, pos_ - start)));
    } catch (const std::invalid_argument&) {
      throw ParseError(ParseErrorKind::SyntaxError, start, "malformed number");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::map<std::string, ProbVar> vocab_;
  const std::map<std::string, Rational>& constants_;
};

}  // namespace

PolyExpr parse_expr(std::string_view text, const std::set<ProbVar>& vocab,
                    const std::map<std::string, Rational>& constants) {
  return Parser(text, vocab, constants).run();
}

// ---------------------------------------------------------------- algebra

Rational eval_expr(const PolyExpr& e, const Assignment& assignment) {
  Rational total = 0;
  for (const auto& [m, c] : e.terms()) {
    Rational t = c;
    for (const auto& [v, k] : m.factors()) {
      auto it = assignment.find(v);
      if (it == assignment.end()) throw MissingAssignment(v);
      Rational pw;
      mpz_pow_ui(pw.get_num_mpz_t(), it->second.get_num_mpz_t(), k);
      mpz_pow_ui(pw.get_den_mpz_t(), it->second.get_den_mpz_t(), k);
      t *= pw;
    }
    total += t;
  }
  return total;
}

PolyExpr grad_expr(const PolyExpr& e, const ProbVar& var) {
  PolyExpr::Terms out;
  for (const auto& [m, c] : e.terms()) {
    auto [rest, k] = m.split(var);
    if (k == 0) continue;
    Monomial mono = k > 1 ? rest * Monomial(var, k - 1) : rest;
    out[mono] += c * k;
  }
  return PolyExpr::from_terms(std::move(out));
}

PolyExpr substitute(const PolyExpr& e, const Assignment& bindings) {
  if (bindings.empty()) return e;
  PolyExpr::Terms out;
  for (const auto& [m, c] : e.terms()) {
    Rational coef = c;
    Monomial rest;
    for (const auto& [v, k] : m.factors()) {
      if (auto it = bindings.find(v); it != bindings.end()) {
        for (unsigned i = 0; i < k; ++i) coef *= it->second;
      } else {
        rest = rest * Monomial(v, k);
      }
    }
    out[rest] += coef;
  }
  return PolyExpr::from_terms(std::move(out));
}

PolyExpr compose(const PolyExpr& e, const std::map<ProbVar, PolyExpr>& bindings) {
  PolyExpr out;
  for (const auto& [m, c] : e.terms()) {
    PolyExpr t(c);
    Monomial rest;
    for (const auto& [v, k] : m.factors()) {
      if (auto it = bindings.find(v); it != bindings.end()) {
        for (unsigned i = 0; i < k; ++i) t *= it->second;
      } else {
        rest = rest * Monomial(v, k);
      }
    }
    out += t * PolyExpr::from_terms({{rest, Rational(1)}});
  }
  return out;
}

std::string to_string(const PolyExpr& e) {
  if (e.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : e.terms()) {
    Rational mag = abs(c);
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    std::string mono;
    for (const auto& [v, k] : m.factors())
      for (unsigned i = 0; i < k; ++i) {
        if (!mono.empty()) mono += "*";
        mono += v.action;
      }
    if (mono.empty())
      out += mag.get_str();
    else if (mag == 1)
      out += mono;
    else
      out += mag.get_str() + "*" + mono;
  }
  return out;
}

// ---------------------------------------------------------------- compiled

CompiledPoly::CompiledPoly(const PolyExpr& e, const std::function<int(const ProbVar&)>& index_of) {
  for (const auto& [m, c] : e.terms()) {
    if (m.is_unit()) {
      constant_ += c.get_d();
      continue;
    }
    Term t{c.get_d(), {}};
    for (const auto& [v, k] : m.factors()) t.factors.emplace_back(index_of(v), k);
    terms_.push_back(std::move(t));
  }
}

namespace {

inline double ipow(double x, unsigned k) {
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

double CompiledPoly::eval(std::span<const double> x) const {
  double total = constant_;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (const auto& [i, k] : t.factors) v *= k == 1 ? x[i] : ipow(x[i], k);
    total += v;
  }
  return total;
}

double CompiledPoly::eval_grad(std::span<const double> x, std::vector<double>& grad, std::size_t dim) const {
  grad.assign(dim, 0.0);
  double total = constant_;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (const auto& [i, k] : t.factors) v *= ipow(x[i], k);
    total += v;
    for (std::size_t f = 0; f < t.factors.size(); ++f) {
      auto [i, k] = t.factors[f];
      double d = t.coef * k * ipow(x[i], k - 1);
      for (std::size_t g = 0; g < t.factors.size(); ++g)
        if (g != f) d *= ipow(x[t.factors[g].first], t.factors[g].second);
      grad[i] += d;
    }
  }
  return total;
}

std::pair<double, double> CompiledPoly::range(std::span<const double> lo, std::span<const double> hi) const {
  double a = constant_, b = constant_;
  for (const auto& t : terms_) {
    double mlo = 1.0, mhi = 1.0;
    for (const auto& [i, k] : t.factors) {
      mlo *= ipow(lo[i], k);
      mhi *= ipow(hi[i], k);
    }
    if (t.coef >= 0) {
      a += t.coef * mlo;
      b += t.coef * mhi;
    } else {
      a += t.coef * mhi;
      b += t.coef * mlo;
    }
  }
  return {a, b};
}

}  // namespace pg::expr
