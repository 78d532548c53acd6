#include "pgsolve/modelio.hpp"

namespace pg::modelio {

Expr Expr::num(Rational v) {
  Expr e;
  e.op = Op::Num;
  e.value = std::move(v);
  return e;
}

Expr Expr::ident(std::string n) {
  Expr e;
  e.op = Op::Ident;
  e.name = std::move(n);
  return e;
}

Expr Expr::boolean(bool b) {
  Expr e;
  e.op = b ? Op::True : Op::False;
  return e;
}

Expr Expr::unary(Op op, Expr a) {
  Expr e;
  e.op = op;
  e.args.push_back(std::move(a));
  return e;
}

Expr Expr::binary(Op op, Expr a, Expr b) {
  Expr e;
  e.op = op;
  e.args.push_back(std::move(a));
  e.args.push_back(std::move(b));
  return e;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  if (a.op == Expr::Op::Num && a.value != b.value) return false;
  if (a.op == Expr::Op::Ident && a.name != b.name) return false;
  for (std::size_t k = 0; k < a.args.size(); ++k)
    if (!(a.args[k] == b.args[k])) return false;
  return true;
}

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::DuplicateAction: return "DuplicateAction";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::DuplicateOrMissingPlayers: return "DuplicateOrMissingPlayers";
    case ErrorKind::UnboundConstant: return "UnboundConstant";
    case ErrorKind::NonPolynomialAfterSubstitution: return "NonPolynomialAfterSubstitution";
    case ErrorKind::InvalidModel: return "InvalidModel";
  }
  return "ModelError";
}

namespace {

std::string locate(const std::string& msg, int line, int col) {
  if (line <= 0) return msg;
  return "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg;
}

}  // namespace

ModelError::ModelError(ErrorKind kind, std::string message, int line, int col)
    : std::runtime_error(to_string(kind) + ": " + locate(message, line, col)), kind_(kind), line_(line), col_(col) {}

// ---------------------------------------------------------------- printing

namespace {

using Op = Expr::Op;

int precedence(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne: return 3;
    case Op::Add: case Op::Sub: return 4;
    case Op::Mul: case Op::Div: return 5;
    case Op::Neg: case Op::Not: return 6;
    case Op::Pow: return 7;
    default: return 8;
  }
}

const char* symbol(Op op) {
  switch (op) {
    case Op::Or: return " | ";
    case Op::And: return " & ";
    case Op::Lt: return " < ";
    case Op::Le: return " <= ";
    case Op::Gt: return " > ";
    case Op::Ge: return " >= ";
    case Op::Eq: return " = ";
    case Op::Ne: return " != ";
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    default: return "?";
  }
}

bool integral_num(const Expr& e) { return e.op == Op::Num && e.value.get_den() == 1 && e.value >= 0; }

void print(const Expr& e, std::string& out);

void print_child(const Expr& c, int min_prec, std::string& out) {
  if (precedence(c.op) < min_prec) {
    out += "(";
    print(c, out);
    out += ")";
  } else {
    print(c, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.op) {
    case Op::Num:
      if (e.value.get_den() == 1 && e.value >= 0)
        out += e.value.get_str();
      else
        out += "(" + e.value.get_str() + ")";
      return;
    case Op::Ident: out += e.name; return;
    case Op::True: out += "true"; return;
    case Op::False: out += "false"; return;
    case Op::Neg:
      out += "-";
      print_child(e.args[0], 6, out);
      return;
    case Op::Not:
      out += "!";
      print_child(e.args[0], 6, out);
      return;
    case Op::Min:
    case Op::Max:
      out += e.op == Op::Min ? "min(" : "max(";
      print(e.args[0], out);
      out += ", ";
      print(e.args[1], out);
      out += ")";
      return;
    case Op::Pow:
      print_child(e.args[0], 8, out);
      out += "^";
      print(e.args[1], out);
      return;
    default: break;
  }
  const int p = precedence(e.op);
  const bool cmp = p == 3;
  // An integer literal over an integer literal would re-read as one rational.
  if (e.op == Op::Div && integral_num(e.args[0]) && integral_num(e.args[1])) {
    out += "(";
    print(e.args[0], out);
    out += ")";
  } else {
    print_child(e.args[0], cmp ? p + 1 : p, out);
  }
  out += symbol(e.op);
  print_child(e.args[1], p + 1, out);
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += sep;
    out += v[k];
  }
  return out;
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

std::string print_model(const ModelAst& ast) {
  std::string out = ast.kind == ModelKind::Nfpg ? "nfpg\n\n" : "pcsg\n\n";
  for (const auto& c : ast.constants) {
    out += "const " + c.name;
    if (c.value) out += " = " + print_expr(*c.value);
    out += ";\n";
  }
  if (!ast.constants.empty()) out += "\n";
  for (const auto& p : ast.players) {
    out += "player " + p.name;
    if (!p.actions.empty()) out += ": " + join(p.actions, ", ");
    out += ";\n";
  }
  out += "\n";
  for (const auto& v : ast.variables)
    out += v.name + " : [" + print_expr(v.lo) + ".." + print_expr(v.hi) + "] init " + print_expr(v.init) + ";\n";
  if (!ast.variables.empty()) out += "\n";
  for (const auto& c : ast.commands) {
    out += "[" + join(c.label, ",") + "] " + print_expr(c.guard) + " ->";
    for (std::size_t b = 0; b < c.branches.size(); ++b) {
      const auto& br = c.branches[b];
      out += b ? "\n    + " : " ";
      out += print_expr(br.prob) + " : ";
      if (br.updates.empty()) {
        out += "true";
      } else {
        for (std::size_t u = 0; u < br.updates.size(); ++u) {
          if (u) out += "&";
          out += "(" + br.updates[u].var + "'=" + print_expr(br.updates[u].value) + ")";
        }
      }
    }
    out += ";\n";
  }
  if (!ast.commands.empty()) out += "\n";
  for (const auto& r : ast.rewards) {
    out += "rewards \"" + r.player + "\"\n";
    for (const auto& it : r.items) {
      out += "  ";
      if (it.label) out += "[" + join(*it.label, ",") + "] ";
      out += print_expr(it.guard) + " : " + print_expr(it.value) + ";\n";
    }
    out += "endrewards\n\n";
  }
  return out;
}

}  // namespace pg::modelio
