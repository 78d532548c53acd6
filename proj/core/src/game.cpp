#include "pgsolve/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pg::game {

Nfpg::Nfpg(std::vector<std::string> players, std::vector<std::vector<std::string>> actions,
           std::vector<std::vector<expr::PolyExpr>> utility)
    : players_(std::move(players)), actions_(std::move(actions)), utility_(std::move(utility)) {
  if (players_.empty()) throw GameError("game has no players");
  if (actions_.size() != players_.size()) throw GameError("action lists do not match players");
  std::set<std::string> seen_players, seen_actions;
  for (std::size_t i = 0; i < players_.size(); ++i) {
    if (!seen_players.insert(players_[i]).second) throw GameError("duplicate player '" + players_[i] + "'");
    if (actions_[i].empty()) actions_[i].push_back(kIdleAction);
    if (actions_[i].size() > 31) throw GameError("player '" + players_[i] + "' has too many actions");
    for (const auto& a : actions_[i]) {
      if (a.empty()) throw GameError("empty action name");
      // Several idle players may share the idle name; it never occurs in utilities.
      if (a != kIdleAction && !seen_actions.insert(a).second) throw GameError("duplicate action '" + a + "'");
      vocab_.insert(expr::ProbVar{static_cast<int>(i), a});
    }
    num_joint_ *= actions_[i].size();
  }
  if (utility_.size() != players_.size()) throw GameError("utility table does not match players");
  for (const auto& row : utility_) {
    if (row.size() != num_joint_) throw GameError("utility table does not cover every joint action");
    for (const auto& e : row)
      for (const auto& v : e.variables())
        if (!vocab_.count(v)) throw GameError("utility refers to undeclared action '" + v.action + "'");
  }
}

std::size_t Nfpg::joint_index(const std::vector<int>& a) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < actions_.size(); ++i) idx = idx * actions_[i].size() + static_cast<std::size_t>(a[i]);
  return idx;
}

std::vector<int> Nfpg::joint_actions(std::size_t joint) const {
  std::vector<int> a(actions_.size());
  for (std::size_t i = actions_.size(); i-- > 0;) {
    a[i] = static_cast<int>(joint % actions_[i].size());
    joint /= actions_[i].size();
  }
  return a;
}

expr::ProbVar Nfpg::var(std::size_t player, std::size_t action) const {
  return expr::ProbVar{static_cast<int>(player), actions_[player][action]};
}

std::optional<std::pair<int, int>> Nfpg::find_action(const std::string& name) const {
  for (std::size_t i = 0; i < actions_.size(); ++i)
    for (std::size_t a = 0; a < actions_[i].size(); ++a)
      if (actions_[i][a] == name) return std::pair{static_cast<int>(i), static_cast<int>(a)};
  return std::nullopt;
}

bool Nfpg::is_classical() const {
  for (const auto& row : utility_)
    for (const auto& e : row)
      if (!e.is_constant()) return false;
  return true;
}

// ---------------------------------------------------------------- profiles

StrategyProfile to_double(const ExactProfile& p) {
  StrategyProfile out;
  for (const auto& row : p.probs) {
    auto& r = out.probs.emplace_back();
    for (const auto& q : row) r.push_back(q.get_d());
  }
  return out;
}

ExactProfile to_exact(const StrategyProfile& p) {
  ExactProfile out;
  for (const auto& row : p.probs) {
    auto& r = out.probs.emplace_back();
    for (double q : row) r.push_back(from_double(q));
  }
  return out;
}

StrategyProfile pure_profile(const Nfpg& g, const std::vector<int>& actions) {
  StrategyProfile p;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    auto& row = p.probs.emplace_back(g.num_actions(i), 0.0);
    row.at(static_cast<std::size_t>(actions.at(i))) = 1.0;
  }
  return p;
}

StrategyProfile profile_from_names(const Nfpg& g, const std::vector<std::pair<std::string, double>>& named) {
  StrategyProfile p;
  std::vector<std::vector<bool>> given;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    p.probs.emplace_back(g.num_actions(i), 0.0);
    given.emplace_back(g.num_actions(i), false);
  }
  for (const auto& [name, prob] : named) {
    auto loc = g.find_action(name);
    if (!loc) throw ProfileShapeMismatch("unknown action '" + name + "'");
    p.probs[loc->first][loc->second] = prob;
    given[loc->first][loc->second] = true;
  }
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    std::size_t missing = 0, idx = 0;
    double mass = 0.0;
    for (std::size_t a = 0; a < g.num_actions(i); ++a) {
      if (given[i][a])
        mass += p.probs[i][a];
      else {
        ++missing;
        idx = a;
      }
    }
    if (missing == 1) p.probs[i][idx] = std::max(0.0, 1.0 - mass);
  }
  return p;
}

namespace {

template <class T>
void check_shape_impl(const Nfpg& g, const std::vector<std::vector<T>>& p) {
  if (p.size() != g.num_players())
    throw ProfileShapeMismatch("profile has " + std::to_string(p.size()) + " players, game has " +
                               std::to_string(g.num_players()));
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i].size() != g.num_actions(i))
      throw ProfileShapeMismatch("profile for player '" + g.players()[i] + "' has wrong number of actions");
}

}  // namespace

void check_shape(const Nfpg& g, const std::vector<std::vector<double>>& p) { check_shape_impl(g, p); }
void check_shape(const Nfpg& g, const std::vector<std::vector<Rational>>& p) { check_shape_impl(g, p); }

bool is_distribution(const StrategyProfile& p) {
  for (const auto& row : p.probs) {
    double s = 0.0;
    for (double q : row) {
      if (!(q >= 0.0)) return false;
      s += q;
    }
    if (std::abs(s - 1.0) > kProbEpsilon) return false;
  }
  return true;
}

// ---------------------------------------------------------------- supports

std::vector<int> Support::actions(std::size_t player) const {
  std::vector<int> out;
  for (int a = 0; a < 32; ++a)
    if ((masks[player] >> a) & 1u) out.push_back(a);
  return out;
}

std::size_t Support::size(std::size_t player) const {
  return static_cast<std::size_t>(__builtin_popcount(masks[player]));
}

Support support_of(const StrategyProfile& p, double eps) {
  Support s;
  for (const auto& row : p.probs) {
    std::uint32_t m = 0;
    for (std::size_t a = 0; a < row.size(); ++a)
      if (row[a] > eps) m |= 1u << a;
    s.masks.push_back(m);
  }
  return s;
}

std::string to_string(const Nfpg& g, const Support& s) {
  std::string out;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    if (i) out += " x ";
    out += "{";
    bool first = true;
    for (int a : s.actions(i)) {
      if (!first) out += ",";
      first = false;
      out += g.actions(i)[static_cast<std::size_t>(a)];
    }
    out += "}";
  }
  return out;
}

std::uint64_t support_count(const Nfpg& g) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < g.num_players(); ++i) n *= (std::uint64_t{1} << g.num_actions(i)) - 1;
  return n;
}

std::vector<Support> enumerate_supports(const Nfpg& g) {
  std::vector<Support> out;
  out.reserve(support_count(g));
  Support cur;
  cur.masks.assign(g.num_players(), 1u);
  for (;;) {
    out.push_back(cur);
    // Advance the last player fastest so player 0 is the most significant key.
    std::size_t i = g.num_players();
    while (i-- > 0) {
      std::uint32_t limit = (1u << g.num_actions(i)) - 1;
      if (cur.masks[i] < limit) {
        ++cur.masks[i];
        break;
      }
      cur.masks[i] = 1u;
      if (i == 0) return out;
    }
  }
}

// ---------------------------------------------------------------- evaluation

NumericGame<double> instantiate(const Nfpg& g, const StrategyProfile& belief) {
  check_shape(g, belief.probs);
  std::map<expr::ProbVar, double> value;
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t a = 0; a < g.num_actions(i); ++a) value[g.var(i, a)] = belief.probs[i][a];
  NumericGame<double> out(g.num_players(), std::vector<double>(g.num_joint()));
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t j = 0; j < g.num_joint(); ++j) {
      double total = 0.0;
      for (const auto& [m, c] : g.utility(i, j).terms()) {
        double t = c.get_d();
        for (const auto& [v, k] : m.factors())
          for (unsigned r = 0; r < k; ++r) t *= value.at(v);
        total += t;
      }
      out[i][j] = total;
    }
  return out;
}

NumericGame<Rational> instantiate(const Nfpg& g, const ExactProfile& belief) {
  check_shape(g, belief.probs);
  expr::Assignment value;
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t a = 0; a < g.num_actions(i); ++a) value[g.var(i, a)] = belief.probs[i][a];
  NumericGame<Rational> out(g.num_players(), std::vector<Rational>(g.num_joint()));
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t j = 0; j < g.num_joint(); ++j) out[i][j] = expr::eval_expr(g.utility(i, j), value);
  return out;
}

namespace {

template <class T>
std::vector<T> expected_impl(const Nfpg& g, const NumericGame<T>& table, const BasicProfile<T>& play) {
  std::vector<T> u(g.num_players(), T(0));
  for (std::size_t j = 0; j < g.num_joint(); ++j) {
    auto a = g.joint_actions(j);
    T w(1);
    for (std::size_t i = 0; i < g.num_players(); ++i) w *= play.probs[i][static_cast<std::size_t>(a[i])];
    if (w == 0) continue;
    for (std::size_t i = 0; i < g.num_players(); ++i) u[i] += table[i][j] * w;
  }
  return u;
}

}  // namespace

std::vector<double> expected_utility(const Nfpg& g, const NumericGame<double>& table, const StrategyProfile& play) {
  check_shape(g, play.probs);
  return expected_impl(g, table, play);
}

std::vector<double> expected_utility(const Nfpg& g, const StrategyProfile& belief, const StrategyProfile& play) {
  check_shape(g, play.probs);
  return expected_impl(g, instantiate(g, belief), play);
}

std::vector<Rational> expected_utility(const Nfpg& g, const ExactProfile& belief, const ExactProfile& play) {
  check_shape(g, play.probs);
  return expected_impl(g, instantiate(g, belief), play);
}

std::vector<std::vector<double>> deviation_payoffs(const Nfpg& g, const NumericGame<double>& table,
                                                   const StrategyProfile& play) {
  check_shape(g, play.probs);
  std::vector<std::vector<double>> dev(g.num_players());
  for (std::size_t i = 0; i < g.num_players(); ++i) dev[i].assign(g.num_actions(i), 0.0);
  for (std::size_t j = 0; j < g.num_joint(); ++j) {
    auto a = g.joint_actions(j);
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      double w = 1.0;
      for (std::size_t k = 0; k < g.num_players(); ++k)
        if (k != i) w *= play.probs[k][static_cast<std::size_t>(a[k])];
      dev[i][static_cast<std::size_t>(a[i])] += table[i][j] * w;
    }
  }
  return dev;
}

Verification verify_ne(const Nfpg& g, const NumericGame<double>& table, const StrategyProfile& profile,
                       double tol) {
  if (!(tol > 0)) throw std::invalid_argument("verification tolerance must be positive");
  auto dev = deviation_payoffs(g, table, profile);
  auto supp = support_of(profile);
  double residual = 0.0;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    double u = 0.0;
    for (std::size_t a = 0; a < g.num_actions(i); ++a) u += profile.probs[i][a] * dev[i][a];
    for (std::size_t a = 0; a < g.num_actions(i); ++a) {
      double d = dev[i][a] - u;
      residual = std::max(residual, supp.contains(i, a) ? std::abs(d) : std::max(0.0, d));
    }
  }
  return {residual <= tol, residual};
}

Verification verify_pe(const Nfpg& g, const StrategyProfile& profile, double tol) {
  return verify_ne(g, instantiate(g, profile), profile, tol);
}

EquilibriumCandidate make_candidate(const Nfpg& g, const StrategyProfile& profile) {
  EquilibriumCandidate c;
  c.profile = profile;
  auto table = instantiate(g, profile);
  c.payoffs = expected_utility(g, table, profile);
  c.welfare = 0.0;
  for (double u : c.payoffs) c.welfare += u;
  c.support = support_of(profile);
  c.residual = verify_ne(g, table, profile).residual;
  return c;
}

}  // namespace pg::game
