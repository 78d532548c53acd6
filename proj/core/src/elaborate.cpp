#include <algorithm>
#include <functional>
#include <set>

#include "pgsolve/modelio.hpp"

namespace pg::modelio {

namespace {

using Op = Expr::Op;
using expr::PolyExpr;
using expr::ProbVar;

using Lookup = std::function<std::optional<Rational>(const std::string&)>;

[[noreturn]] void error_at(ErrorKind k, const std::string& msg, const Expr& e) {
  throw ModelError(k, msg, e.line, e.col);
}

Rational integer_power(const Rational& base, unsigned n) {
  Rational r = 1;
  for (unsigned k = 0; k < n; ++k) r *= base;
  return r;
}

unsigned exponent_of(const Expr& e) {
  const Expr& n = e.args[1];
  if (n.op != Op::Num || n.value.get_den() != 1 || n.value < 0 || n.value > 999)
    error_at(ErrorKind::RangeError, "exponent must be an integer literal in 0..999", e);
  return static_cast<unsigned>(n.value.get_num().get_ui());
}

// Numeric and boolean evaluation; booleans are 0 or 1.
Rational eval(const Expr& e, const Lookup& env) {
  auto b = [](bool v) { return Rational(v ? 1 : 0); };
  switch (e.op) {
    case Op::Num: return e.value;
    case Op::True: return 1;
    case Op::False: return 0;
    case Op::Ident: {
      auto v = env(e.name);
      if (!v) error_at(ErrorKind::UnknownIdentifier, "'" + e.name + "' has no value here", e);
      return *v;
    }
    case Op::Neg: return -eval(e.args[0], env);
    case Op::Not: return b(eval(e.args[0], env) == 0);
    case Op::Pow: return integer_power(eval(e.args[0], env), exponent_of(e));
    default: break;
  }
  if (e.op == Op::And) return b(eval(e.args[0], env) != 0 && eval(e.args[1], env) != 0);
  if (e.op == Op::Or) return b(eval(e.args[0], env) != 0 || eval(e.args[1], env) != 0);
  const Rational x = eval(e.args[0], env), y = eval(e.args[1], env);
  switch (e.op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div:
      if (y == 0) error_at(ErrorKind::RangeError, "division by zero", e);
      return x / y;
    case Op::Lt: return b(x < y);
    case Op::Le: return b(x <= y);
    case Op::Gt: return b(x > y);
    case Op::Ge: return b(x >= y);
    case Op::Eq: return b(x == y);
    case Op::Ne: return b(x != y);
    case Op::Min: return std::min(x, y);
    case Op::Max: return std::max(x, y);
    default: break;
  }
  error_at(ErrorKind::InvalidModel, "unsupported operator", e);
}

// Reward expression as a polynomial; `action` maps an action name to its
// probability variable, or to nullopt when the action is unavailable (zero).
using ActionVar = std::function<std::optional<std::optional<ProbVar>>(const std::string&)>;

PolyExpr to_poly(const Expr& e, const Lookup& env, const ActionVar& action) {
  switch (e.op) {
    case Op::Num: return PolyExpr(e.value);
    case Op::Ident: {
      if (auto v = env(e.name)) return PolyExpr(*v);
      if (auto a = action(e.name)) return *a ? PolyExpr::variable(**a) : PolyExpr(0);
      error_at(ErrorKind::UnknownIdentifier, "unknown identifier '" + e.name + "'", e);
    }
    case Op::Neg: return -to_poly(e.args[0], env, action);
    case Op::Add: return to_poly(e.args[0], env, action) + to_poly(e.args[1], env, action);
    case Op::Sub: return to_poly(e.args[0], env, action) - to_poly(e.args[1], env, action);
    case Op::Mul: return to_poly(e.args[0], env, action) * to_poly(e.args[1], env, action);
    case Op::Div: {
      PolyExpr d = to_poly(e.args[1], env, action);
      if (!d.is_constant())
        error_at(ErrorKind::NonPolynomialAfterSubstitution, "division by an action probability", e);
      if (d.constant_term() == 0) error_at(ErrorKind::RangeError, "division by zero", e);
      return to_poly(e.args[0], env, action) * PolyExpr(Rational(1) / d.constant_term());
    }
    case Op::Pow: {
      const unsigned n = exponent_of(e);
      PolyExpr base = to_poly(e.args[0], env, action), r(1);
      for (unsigned k = 0; k < n; ++k) r *= base;
      return r;
    }
    default: error_at(ErrorKind::NonPolynomialAfterSubstitution, "reward is not a polynomial", e);
  }
}

std::map<std::string, Rational> resolve_constants(const ModelAst& ast, const Bindings& bindings) {
  std::set<std::string> declared;
  for (const auto& c : ast.constants) declared.insert(c.name);
  for (const auto& [name, v] : bindings)
    if (!declared.count(name)) throw ModelError(ErrorKind::UnknownIdentifier, "no constant named '" + name + "'");
  std::map<std::string, Rational> out;
  Lookup env = [&](const std::string& n) -> std::optional<Rational> {
    auto it = out.find(n);
    if (it == out.end()) return std::nullopt;
    return it->second;
  };
  for (const auto& c : ast.constants) {
    if (auto it = bindings.find(c.name); it != bindings.end()) {
      out[c.name] = it->second;
    } else if (c.value) {
      try {
        out[c.name] = eval(*c.value, env);
      } catch (const ModelError& e) {
        if (e.kind() != ErrorKind::UnknownIdentifier) throw;
        throw ModelError(ErrorKind::UnboundConstant, "constant '" + c.name + "' depends on an unbound constant");
      }
    } else {
      throw ModelError(ErrorKind::UnboundConstant, "no value for constant '" + c.name + "'");
    }
  }
  return out;
}

std::vector<std::size_t> reward_owners(const ModelAst& ast) {
  std::vector<std::size_t> out;
  for (const auto& r : ast.rewards) {
    auto it = std::find_if(ast.players.begin(), ast.players.end(), [&](const auto& p) { return p.name == r.player; });
    if (it == ast.players.end()) throw ModelError(ErrorKind::UnknownIdentifier, "unknown player '" + r.player + "'");
    out.push_back(static_cast<std::size_t>(it - ast.players.begin()));
  }
  return out;
}

bool label_matches(const std::vector<std::string>& label, const std::set<std::string>& chosen) {
  return std::all_of(label.begin(), label.end(), [&](const auto& a) { return chosen.count(a) > 0; });
}

std::vector<std::vector<std::string>> joint_table(const std::vector<std::vector<std::string>>& actions,
                                                   std::size_t* count) {
  std::size_t joints = 1;
  for (const auto& a : actions) joints *= a.size();
  std::vector<std::vector<std::string>> out(joints);
  for (std::size_t j = 0; j < joints; ++j) {
    std::size_t rest = j;
    out[j].resize(actions.size());
    for (std::size_t i = actions.size(); i-- > 0;) {
      out[j][i] = actions[i][rest % actions[i].size()];
      rest /= actions[i].size();
    }
  }
  *count = joints;
  return out;
}

// ---------------------------------------------------------------- pcsg

class DslDynamics : public pcsg::Dynamics {
 public:
  DslDynamics(ModelAst ast, std::map<std::string, Rational> constants)
      : ast_(std::move(ast)), consts_(std::move(constants)), owners_(reward_owners(ast_)) {
    for (std::size_t i = 0; i < ast_.players.size(); ++i)
      for (const auto& a : ast_.players[i].actions) action_owner_[a] = i;
    auto env = const_env();
    for (const auto& v : ast_.variables) {
      auto whole = [&](const Expr& e, const char* what) {
        Rational x = eval(e, env);
        if (x.get_den() != 1 || abs(x) > 1000000000)
          throw ModelError(ErrorKind::RangeError, std::string(what) + " of '" + v.name + "' is not a usable integer",
                           e.line, e.col);
        return static_cast<int>(x.get_num().get_si());
      };
      const int lo = whole(v.lo, "lower bound"), hi = whole(v.hi, "upper bound"), init = whole(v.init, "initial value");
      if (lo > hi || init < lo || init > hi)
        throw ModelError(ErrorKind::RangeError, "bad range or initial value for '" + v.name + "'", v.lo.line, v.lo.col);
      lo_.push_back(lo);
      hi_.push_back(hi);
      init_.push_back(init);
      var_index_[v.name] = var_index_.size();
    }
  }

  std::vector<std::string> players() const override {
    std::vector<std::string> out;
    for (const auto& p : ast_.players) out.push_back(p.name);
    return out;
  }

  std::vector<std::string> variables() const override {
    std::vector<std::string> out;
    for (const auto& v : ast_.variables) out.push_back(v.name);
    return out;
  }

  pcsg::State initial() const override { return init_; }

  pcsg::StateInfo expand(const pcsg::State& s) const override {
    const Lookup env = state_env(s);
    const std::size_t n = ast_.players.size();
    std::vector<const Command*> enabled;
    for (const auto& c : ast_.commands)
      if (eval(c.guard, env) != 0) enabled.push_back(&c);

    pcsg::StateInfo info;
    info.actions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& a : ast_.players[i].actions) {
        bool used = std::any_of(enabled.begin(), enabled.end(), [&](const Command* c) {
          return std::find(c->label.begin(), c->label.end(), a) != c->label.end();
        });
        if (used) info.actions[i].push_back(a);
      }
      if (info.actions[i].empty()) info.actions[i].push_back(game::kIdleAction);
    }
    std::size_t joints = 0;
    const auto table = joint_table(info.actions, &joints);

    info.transitions.resize(joints);
    for (std::size_t j = 0; j < joints; ++j) {
      const std::set<std::string> chosen(table[j].begin(), table[j].end());
      if (enabled.empty()) {
        info.transitions[j].emplace_back(s, Rational(1));
        continue;
      }
      const Command* match = nullptr;
      for (const Command* c : enabled)
        if (label_matches(c->label, chosen)) {
          if (match)
            throw ModelError(ErrorKind::InvalidModel, "commands on lines " + std::to_string(match->line) + " and " +
                                                          std::to_string(c->line) + " both match in state " +
                                                          pcsg::to_string(s, variables()));
          match = c;
        }
      if (!match)
        throw ModelError(ErrorKind::InvalidModel,
                         "no command for a joint action in state " + pcsg::to_string(s, variables()));
      for (const auto& br : match->branches) {
        pcsg::State t = s;
        for (const auto& u : br.updates) {
          const std::size_t k = var_index_.at(u.var);
          Rational v = eval(u.value, env);
          if (v.get_den() != 1 || v < lo_[k] || v > hi_[k])
            throw ModelError(ErrorKind::RangeError, "update leaves the range of '" + u.var + "'", u.value.line,
                             u.value.col);
          t[k] = static_cast<int>(v.get_num().get_si());
        }
        info.transitions[j].emplace_back(std::move(t), eval(br.prob, env));
      }
    }

    info.action_rewards.assign(n, std::vector<PolyExpr>(joints));
    info.state_rewards.assign(n, Rational(0));
    const ActionVar action = [&](const std::string& a) -> std::optional<std::optional<ProbVar>> {
      auto it = action_owner_.find(a);
      if (it == action_owner_.end()) return std::nullopt;
      const auto& avail = info.actions[it->second];
      if (std::find(avail.begin(), avail.end(), a) == avail.end()) return std::optional<ProbVar>{};
      return std::optional<ProbVar>{ProbVar{static_cast<int>(it->second), a}};
    };
    for (std::size_t b = 0; b < ast_.rewards.size(); ++b) {
      const std::size_t i = owners_[b];
      for (const auto& item : ast_.rewards[b].items) {
        if (eval(item.guard, env) == 0) continue;
        if (!item.label) {
          PolyExpr v = to_poly(item.value, env, action);
          if (v.is_constant()) {
            info.state_rewards[i] += v.constant_term();
          } else {
            for (auto& r : info.action_rewards[i]) r += v;
          }
          continue;
        }
        std::optional<PolyExpr> v;
        for (std::size_t j = 0; j < joints; ++j) {
          const std::set<std::string> chosen(table[j].begin(), table[j].end());
          if (!label_matches(*item.label, chosen)) continue;
          if (!v) v = to_poly(item.value, env, action);
          info.action_rewards[i][j] += *v;
        }
      }
    }
    return info;
  }

 private:
  ModelAst ast_;
  std::map<std::string, Rational> consts_;
  std::vector<std::size_t> owners_;
  std::map<std::string, std::size_t> action_owner_;
  std::map<std::string, std::size_t> var_index_;
  std::vector<int> lo_, hi_, init_;

  Lookup const_env() const {
    return [this](const std::string& n) -> std::optional<Rational> {
      auto it = consts_.find(n);
      if (it == consts_.end()) return std::nullopt;
      return it->second;
    };
  }

  Lookup state_env(const pcsg::State& s) const {
    return [this, &s](const std::string& n) -> std::optional<Rational> {
      if (auto it = consts_.find(n); it != consts_.end()) return it->second;
      if (auto it = var_index_.find(n); it != var_index_.end()) return Rational(s.at(it->second));
      return std::nullopt;
    };
  }
};

}  // namespace

game::Nfpg elaborate_nfpg(const ModelAst& ast, const Bindings& bindings) {
  if (ast.kind != ModelKind::Nfpg) throw ModelError(ErrorKind::InvalidModel, "model is not an nfpg");
  const auto consts = resolve_constants(ast, bindings);
  const Lookup env = [&](const std::string& n) -> std::optional<Rational> {
    auto it = consts.find(n);
    if (it == consts.end()) return std::nullopt;
    return it->second;
  };
  std::vector<std::string> players;
  std::vector<std::vector<std::string>> actions;
  std::map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < ast.players.size(); ++i) {
    players.push_back(ast.players[i].name);
    actions.push_back(ast.players[i].actions);
    if (actions.back().empty()) actions.back().push_back(game::kIdleAction);
    for (const auto& a : ast.players[i].actions) owner[a] = i;
  }
  const ActionVar action = [&](const std::string& a) -> std::optional<std::optional<ProbVar>> {
    auto it = owner.find(a);
    if (it == owner.end()) return std::nullopt;
    return std::optional<ProbVar>{ProbVar{static_cast<int>(it->second), a}};
  };
  std::size_t joints = 0;
  const auto table = joint_table(actions, &joints);
  std::vector<std::vector<PolyExpr>> util(players.size(), std::vector<PolyExpr>(joints));
  const auto owners = reward_owners(ast);
  for (std::size_t b = 0; b < ast.rewards.size(); ++b)
    for (const auto& item : ast.rewards[b].items) {
      if (eval(item.guard, env) == 0) continue;
      const PolyExpr v = to_poly(item.value, env, action);
      for (std::size_t j = 0; j < joints; ++j) {
        const std::set<std::string> chosen(table[j].begin(), table[j].end());
        if (!item.label || label_matches(*item.label, chosen)) util[owners[b]][j] += v;
      }
    }
  try {
    return game::Nfpg(std::move(players), std::move(actions), std::move(util));
  } catch (const game::GameError& e) {
    throw ModelError(ErrorKind::InvalidModel, e.what());
  }
}

pcsg::Pcsg elaborate_pcsg(const ModelAst& ast, const Bindings& bindings) {
  if (ast.kind != ModelKind::Pcsg) throw ModelError(ErrorKind::InvalidModel, "model is not a pcsg");
  auto consts = resolve_constants(ast, bindings);
  return pcsg::Pcsg(std::make_shared<DslDynamics>(ast, std::move(consts)));
}

Model elaborate(const ModelAst& ast, const Bindings& bindings) {
  if (ast.kind == ModelKind::Nfpg) return elaborate_nfpg(ast, bindings);
  return elaborate_pcsg(ast, bindings);
}

}  // namespace pg::modelio
