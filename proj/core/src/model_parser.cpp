#include <cctype>
#include <set>

#include "pgsolve/modelio.hpp"

namespace pg::modelio {

namespace {

using Op = Expr::Op;

enum class Tok { Ident, Number, String, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  auto digit = [&](std::size_t at) { return at < src.size() && std::isdigit(static_cast<unsigned char>(src[at])); };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    std::size_t j = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
    } else if (digit(i)) {
      while (digit(j)) ++j;
      if (j < src.size() && src[j] == '.' && digit(j + 1)) {
        ++j;
        while (digit(j)) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (digit(k)) {
          j = k;
          while (digit(j)) ++j;
        }
      }
      t.kind = Tok::Number;
    } else if (c == '"') {
      ++j;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"') throw ModelError(ErrorKind::SyntaxError, "unterminated string", line, col);
      t.kind = Tok::String;
      t.text = std::string(src.substr(i + 1, j - i - 1));
      advance(j + 1 - i);
      out.push_back(std::move(t));
      continue;
    } else {
      static const char* two[] = {"->", "<=", ">=", "!=", ".."};
      t.kind = Tok::Sym;
      j = i + 1;
      for (const char* s : two)
        if (src.substr(i, 2) == s) j = i + 2;
      if (j == i + 1 && std::string_view("[](),;:+-*/^<>=&|!'").find(c) == std::string_view::npos)
        throw ModelError(ErrorKind::SyntaxError, std::string("unexpected character '") + c + "'", line, col);
    }
    t.text = std::string(src.substr(i, j - i));
    advance(j - i);
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {"nfpg", "pcsg",  "const", "player", "rewards", "endrewards",
                                          "init", "true", "false", "min",    "max"};
  return k;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  ModelAst model() {
    ModelAst ast;
    if (is_word("nfpg")) {
      ast.kind = ModelKind::Nfpg;
    } else if (is_word("pcsg")) {
      ast.kind = ModelKind::Pcsg;
    } else {
      fail("expected model type 'nfpg' or 'pcsg'");
    }
    next();
    while (peek().kind != Tok::End) {
      if (is_word("const")) {
        next();
        ConstDecl d;
        d.name = name("constant name");
        if (accept("=")) d.value = expr();
        expect(";");
        ast.constants.push_back(std::move(d));
      } else if (is_word("player")) {
        next();
        PlayerDecl p;
        p.name = name("player name");
        if (accept(":")) {
          do p.actions.push_back(name("action name"));
          while (accept(","));
        }
        expect(";");
        ast.players.push_back(std::move(p));
      } else if (is_word("rewards")) {
        ast.rewards.push_back(rewards());
      } else if (is_sym("[")) {
        if (ast.kind != ModelKind::Pcsg) fail("commands are only allowed in pcsg models");
        ast.commands.push_back(command());
      } else if (peek().kind == Tok::Ident && !keywords().count(peek().text) && peek(1).text == ":") {
        if (ast.kind != ModelKind::Pcsg) fail("state variables are only allowed in pcsg models");
        ast.variables.push_back(variable());
      } else {
        fail("unexpected '" + peek().text + "'");
      }
    }
    return ast;
  }

 private:
  std::vector<Token> t_;
  std::size_t p_ = 0;

  const Token& peek(std::size_t ahead = 0) const { return t_[std::min(p_ + ahead, t_.size() - 1)]; }
  const Token& next() { return t_[p_ < t_.size() - 1 ? p_++ : p_]; }
  bool is_sym(const char* s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Sym && peek(ahead).text == s;
  }
  bool is_word(const char* s) const { return peek().kind == Tok::Ident && peek().text == s; }
  bool accept(const char* s) {
    if (!is_sym(s)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ModelError(ErrorKind::SyntaxError, msg, peek().line, peek().col);
  }
  void expect(const char* s) {
    if (!accept(s)) fail(std::string("expected '") + s + "' but found '" + peek().text + "'");
  }
  std::string name(const char* what) {
    if (peek().kind != Tok::Ident || keywords().count(peek().text)) fail(std::string("expected ") + what);
    return next().text;
  }

  std::vector<std::string> label() {
    expect("[");
    std::vector<std::string> out;
    if (!is_sym("]")) {
      do out.push_back(name("action name"));
      while (accept(","));
    }
    expect("]");
    return out;
  }

  VarDecl variable() {
    VarDecl v;
    v.name = name("variable name");
    expect(":");
    expect("[");
    v.lo = expr();
    expect("..");
    v.hi = expr();
    expect("]");
    if (!is_word("init")) fail("expected 'init'");
    next();
    v.init = expr();
    expect(";");
    return v;
  }

  Command command() {
    Command c;
    c.line = peek().line;
    c.label = label();
    c.guard = expr();
    expect("->");
    do c.branches.push_back(branch());
    while (accept("+"));
    expect(";");
    return c;
  }

  bool at_update() const { return is_sym("(") && peek(1).kind == Tok::Ident && peek(2).text == "'"; }

  Branch branch() {
    Branch b;
    if (at_update() || (is_word("true") && (is_sym(";", 1) || is_sym("+", 1)))) {
      b.prob = Expr::num(1);
    } else {
      b.prob = expr();
      expect(":");
    }
    if (is_word("true")) {
      next();
      return b;
    }
    do {
      if (!at_update()) fail("expected an update (x'=expr)");
      expect("(");
      Assign a;
      a.var = name("variable name");
      expect("'");
      expect("=");
      a.value = expr();
      expect(")");
      b.updates.push_back(std::move(a));
    } while (accept("&"));
    return b;
  }

  RewardBlock rewards() {
    next();
    RewardBlock r;
    if (peek().kind != Tok::String) fail("expected quoted player name");
    r.player = next().text;
    while (!is_word("endrewards")) {
      if (peek().kind == Tok::End) fail("missing 'endrewards'");
      RewardItem it;
      it.line = peek().line;
      if (is_sym("[")) it.label = label();
      it.guard = expr();
      expect(":");
      it.value = expr();
      expect(";");
      r.items.push_back(std::move(it));
    }
    next();
    return r;
  }

  // ---------------------------------------------------------- expressions

  Expr at(Expr e, const Token& t) {
    e.line = t.line;
    e.col = t.col;
    return e;
  }

  Expr expr() { return disjunction(); }

  Expr disjunction() {
    Expr e = conjunction();
    while (is_sym("|")) {
      const Token t = next();
      e = at(Expr::binary(Op::Or, std::move(e), conjunction()), t);
    }
    return e;
  }

  Expr conjunction() {
    Expr e = comparison();
    // '&' followed by an update belongs to the enclosing branch.
    while (is_sym("&") && !(is_sym("(", 1) && peek(2).kind == Tok::Ident && peek(3).text == "'")) {
      const Token t = next();
      e = at(Expr::binary(Op::And, std::move(e), comparison()), t);
    }
    return e;
  }

  Expr comparison() {
    Expr e = sum();
    static const std::pair<const char*, Op> ops[] = {{"<", Op::Lt}, {"<=", Op::Le}, {">", Op::Gt},
                                                     {">=", Op::Ge}, {"=", Op::Eq}, {"!=", Op::Ne}};
    for (const auto& [s, op] : ops)
      if (is_sym(s)) {
        const Token t = next();
        return at(Expr::binary(op, std::move(e), sum()), t);
      }
    return e;
  }

  Expr sum() {
    Expr e = product();
    while (is_sym("+") || is_sym("-")) {
      const Token t = next();
      e = at(Expr::binary(t.text == "+" ? Op::Add : Op::Sub, std::move(e), product()), t);
    }
    return e;
  }

  static bool integer_literal(const Expr& e) { return e.op == Op::Num && e.value.get_den() == 1; }

  Expr product() {
    Expr e = unary();
    while (is_sym("*") || is_sym("/")) {
      const Token t = next();
      if (t.text == "/" && integer_literal(e) && peek().kind == Tok::Number && !is_sym("^", 1)) {
        Expr d = unary();
        if (d.value == 0) throw ModelError(ErrorKind::RangeError, "division by zero", t.line, t.col);
        Rational q = e.value / d.value;
        q.canonicalize();
        e = at(Expr::num(q), t);
        continue;
      }
      e = at(Expr::binary(t.text == "*" ? Op::Mul : Op::Div, std::move(e), unary()), t);
    }
    return e;
  }

  Expr unary() {
    if (is_sym("-") || is_sym("!")) {
      const Token t = next();
      return at(Expr::unary(t.text == "-" ? Op::Neg : Op::Not, unary()), t);
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (is_sym("^")) {
      const Token t = next();
      if (peek().kind != Tok::Number || peek().text.find_first_not_of("0123456789") != std::string::npos)
        fail("exponent must be a non-negative integer literal");
      if (peek().text.size() > 3) throw ModelError(ErrorKind::RangeError, "exponent too large", peek().line, peek().col);
      const Token n = next();
      return at(Expr::binary(Op::Pow, std::move(base), at(Expr::num(parse_rational(n.text)), n)), t);
    }
    return base;
  }

  Expr primary() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      next();
      return at(Expr::num(parse_rational(t.text)), t);
    }
    if (accept("(")) {
      Expr e = expr();
      expect(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true" || t.text == "false") {
        next();
        return at(Expr::boolean(t.text == "true"), t);
      }
      if (t.text == "min" || t.text == "max") {
        next();
        expect("(");
        Expr a = expr();
        expect(",");
        Expr b = expr();
        expect(")");
        return at(Expr::binary(t.text == "min" ? Op::Min : Op::Max, std::move(a), std::move(b)), t);
      }
      if (keywords().count(t.text)) fail("unexpected keyword '" + t.text + "'");
      next();
      return at(Expr::ident(t.text), t);
    }
    fail(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }
};

// ---------------------------------------------------------------- checks

bool boolean_op(Op op) {
  switch (op) {
    case Op::True: case Op::False: case Op::Not: case Op::And: case Op::Or:
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne:
      return true;
    default:
      return false;
  }
}

[[noreturn]] void error_at(ErrorKind k, const std::string& msg, const Expr& e) {
  throw ModelError(k, msg, e.line, e.col);
}

struct Scope {
  const std::set<std::string>* constants = nullptr;
  const std::set<std::string>* variables = nullptr;
  const std::set<std::string>* actions = nullptr;  // null outside rewards
  bool allow_minmax = false;
};

// Checks identifiers and that boolean and numeric operators are not mixed.
void check(const Expr& e, bool want_bool, const Scope& s) {
  const bool is_bool = boolean_op(e.op);
  if (e.op != Op::Ident && is_bool != want_bool)
    error_at(ErrorKind::SyntaxError, want_bool ? "expected a condition" : "expected a numeric expression", e);
  switch (e.op) {
    case Op::Ident: {
      if (want_bool) error_at(ErrorKind::SyntaxError, "expected a condition", e);
      const bool known = s.constants->count(e.name) || (s.variables && s.variables->count(e.name)) ||
                         (s.actions && s.actions->count(e.name));
      if (!known) error_at(ErrorKind::UnknownIdentifier, "unknown identifier '" + e.name + "'", e);
      return;
    }
    case Op::Min:
    case Op::Max:
      if (!s.allow_minmax) error_at(ErrorKind::SyntaxError, "min/max are only allowed in updates", e);
      break;
    default: break;
  }
  bool child_bool = false;
  switch (e.op) {
    case Op::Not: case Op::And: case Op::Or: child_bool = true; break;
    default: break;
  }
  if (e.op == Op::Pow) {
    check(e.args[0], false, s);
    return;
  }
  for (const auto& a : e.args) check(a, child_bool, s);
}

void validate(const ModelAst& ast) {
  if (ast.players.empty()) throw ModelError(ErrorKind::DuplicateOrMissingPlayers, "model declares no players");
  std::set<std::string> players, actions, constants, variables;
  for (const auto& p : ast.players) {
    if (!players.insert(p.name).second)
      throw ModelError(ErrorKind::DuplicateOrMissingPlayers, "player '" + p.name + "' declared twice");
    for (const auto& a : p.actions) {
      if (a == game::kIdleAction) throw ModelError(ErrorKind::DuplicateAction, "'idle' is reserved");
      if (!actions.insert(a).second) throw ModelError(ErrorKind::DuplicateAction, "action '" + a + "' declared twice");
    }
  }
  for (const auto& c : ast.constants) {
    if (c.value) check(*c.value, false, Scope{&constants, nullptr, nullptr, false});
    if (players.count(c.name) || actions.count(c.name) || !constants.insert(c.name).second)
      throw ModelError(ErrorKind::DuplicateAction, "name '" + c.name + "' declared twice");
  }
  for (const auto& v : ast.variables) {
    const Scope s{&constants, nullptr, nullptr, false};
    check(v.lo, false, s);
    check(v.hi, false, s);
    check(v.init, false, s);
    if (constants.count(v.name) || actions.count(v.name) || !variables.insert(v.name).second)
      throw ModelError(ErrorKind::DuplicateAction, "name '" + v.name + "' declared twice");
    if (v.lo.op == Op::Num && v.hi.op == Op::Num && v.init.op == Op::Num &&
        (v.lo.value > v.hi.value || v.init.value < v.lo.value || v.init.value > v.hi.value))
      throw ModelError(ErrorKind::RangeError, "bad range or initial value for '" + v.name + "'", v.lo.line, v.lo.col);
  }
  std::map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < ast.players.size(); ++i)
    for (const auto& a : ast.players[i].actions) owner[a] = i;
  auto check_label = [&](const std::vector<std::string>& label, int line) {
    std::set<std::size_t> seen;
    for (const auto& a : label) {
      auto it = owner.find(a);
      if (it == owner.end()) throw ModelError(ErrorKind::UnknownIdentifier, "unknown action '" + a + "'", line);
      if (!seen.insert(it->second).second)
        throw ModelError(ErrorKind::SyntaxError, "label names two actions of player '" + ast.players[it->second].name + "'",
                         line);
    }
  };
  for (const auto& c : ast.commands) {
    check_label(c.label, c.line);
    check(c.guard, true, Scope{&constants, &variables, nullptr, false});
    for (const auto& b : c.branches) {
      check(b.prob, false, Scope{&constants, &variables, nullptr, false});
      std::set<std::string> assigned;
      for (const auto& u : b.updates) {
        if (!variables.count(u.var))
          throw ModelError(ErrorKind::UnknownIdentifier, "unknown variable '" + u.var + "'", u.value.line);
        if (!assigned.insert(u.var).second)
          throw ModelError(ErrorKind::SyntaxError, "variable '" + u.var + "' updated twice", u.value.line);
        check(u.value, false, Scope{&constants, &variables, nullptr, true});
      }
    }
  }
  std::set<std::string> rewarded;
  for (const auto& r : ast.rewards) {
    if (!players.count(r.player)) throw ModelError(ErrorKind::UnknownIdentifier, "unknown player '" + r.player + "'");
    rewarded.insert(r.player);
    for (const auto& it : r.items) {
      if (it.label) check_label(*it.label, it.line);
      check(it.guard, true, Scope{&constants, &variables, nullptr, false});
      check(it.value, false, Scope{&constants, &variables, &actions, false});
    }
  }
}

}  // namespace

ModelAst parse_model(std::string_view text) {
  Parser p(lex(text));
  ModelAst ast = p.model();
  validate(ast);
  return ast;
}

std::vector<std::string> unbound_constants(const ModelAst& ast) {
  std::vector<std::string> out;
  for (const auto& c : ast.constants)
    if (!c.value) out.push_back(c.name);
  return out;
}

}  // namespace pg::modelio
