#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the solver; entries are evaluated term by term from the stored
// coefficients and equilibria are checked by explicit summation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pgsolve/expr.hpp"
#include "pgsolve/game.hpp"
#include "pgsolve/nlp.hpp"

namespace oracle {

using pg::Rational;
using pg::expr::PolyExpr;
using pg::expr::ProbVar;

inline double naive_eval(const PolyExpr& e, const std::map<ProbVar, double>& x) {
  double s = 0.0;
  for (const auto& [m, c] : e.terms()) {
    double t = c.get_d();
    for (const auto& [v, k] : m.factors())
      for (unsigned r = 0; r < k; ++r) t *= x.at(v);
    s += t;
  }
  return s;
}

inline Rational naive_eval_exact(const PolyExpr& e, const std::map<ProbVar, Rational>& x) {
  Rational s = 0;
  for (const auto& [m, c] : e.terms()) {
    Rational t = c;
    for (const auto& [v, k] : m.factors())
      for (unsigned r = 0; r < k; ++r) t *= x.at(v);
    s += t;
  }
  return s;
}

inline std::map<ProbVar, double> assignment(const pg::game::Nfpg& g, const pg::game::StrategyProfile& p) {
  std::map<ProbVar, double> x;
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t a = 0; a < g.num_actions(i); ++a) x[g.var(i, a)] = p.probs[i][a];
  return x;
}

// Odometer over joint actions, last player fastest.
inline std::vector<std::vector<int>> all_joints(const pg::game::Nfpg& g) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(g.num_players(), 0);
  while (true) {
    out.push_back(a);
    int i = static_cast<int>(g.num_players()) - 1;
    while (i >= 0 && ++a[static_cast<std::size_t>(i)] == static_cast<int>(g.num_actions(static_cast<std::size_t>(i)))) {
      a[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return out;
}

// Player payoffs when beliefs sit at `belief` and actions follow `play`.
inline std::vector<double> payoffs(const pg::game::Nfpg& g, const pg::game::StrategyProfile& belief,
                                   const pg::game::StrategyProfile& play) {
  const auto x = assignment(g, belief);
  const auto joints = all_joints(g);
  std::vector<double> u(g.num_players(), 0.0);
  for (std::size_t j = 0; j < joints.size(); ++j) {
    double w = 1.0;
    for (std::size_t i = 0; i < g.num_players(); ++i) w *= play.probs[i][static_cast<std::size_t>(joints[j][i])];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < g.num_players(); ++i) u[i] += w * naive_eval(g.utility(i, j), x);
  }
  return u;
}

// Largest gain from a unilateral pure deviation with beliefs frozen.
inline double max_gain(const pg::game::Nfpg& g, const pg::game::StrategyProfile& p) {
  const auto base = payoffs(g, p, p);
  double gain = 0.0;
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t a = 0; a < g.num_actions(i); ++a) {
      auto q = p;
      std::fill(q.probs[i].begin(), q.probs[i].end(), 0.0);
      q.probs[i][a] = 1.0;
      gain = std::max(gain, payoffs(g, p, q)[i] - base[i]);
    }
  return gain;
}

inline pg::game::Support support(const pg::game::StrategyProfile& p, double eps = 1e-8) {
  pg::game::Support s;
  for (const auto& row : p.probs) {
    std::uint32_t m = 0;
    for (std::size_t a = 0; a < row.size(); ++a)
      if (row[a] > eps) m |= 1u << a;
    s.masks.push_back(m);
  }
  return s;
}

inline std::set<pg::game::Support> supports(const std::vector<pg::game::EquilibriumCandidate>& cs) {
  std::set<pg::game::Support> out;
  for (const auto& c : cs) out.insert(c.support);
  return out;
}

// Screening tolerance for the grid oracle: a bound on how far the residual
// can move between a point and its nearest grid neighbour.
inline double grid_tolerance(const pg::game::Nfpg& g, int resolution) {
  double lip = 0.0;
  for (std::size_t i = 0; i < g.num_players(); ++i)
    for (std::size_t j = 0; j < g.num_joint(); ++j) {
      double s = 0.0;
      for (const auto& [m, c] : g.utility(i, j).terms()) s += std::abs(c.get_d()) * (1.0 + m.degree());
      lip = std::max(lip, s);
    }
  return std::max(1e-3, 4.0 * lip * static_cast<double>(g.num_players()) / resolution);
}

inline Rational random_coef(std::mt19937_64& rng, int lo, int hi, int den) {
  std::uniform_int_distribution<int> d(lo * den, hi * den);
  return pg::ratio(d(rng), den);
}

// Random polynomial over xs with total degree <= deg.
inline PolyExpr random_poly(std::mt19937_64& rng, const std::vector<ProbVar>& xs, unsigned deg, int bound) {
  std::uniform_int_distribution<int> nterms(1, 6), pick(0, static_cast<int>(xs.size()) - 1),
      dd(0, static_cast<int>(deg));
  PolyExpr e;
  for (int t = nterms(rng); t > 0; --t) {
    PolyExpr m(random_coef(rng, -bound, bound, 8));
    for (int k = dd(rng); k > 0; --k) m *= PolyExpr::variable(xs[static_cast<std::size_t>(pick(rng))]);
    e += m;
  }
  return e;
}

inline pg::expr::Assignment random_point(std::mt19937_64& rng, const std::vector<ProbVar>& xs) {
  pg::expr::Assignment out;
  for (const auto& v : xs) out[v] = random_coef(rng, 0, 1, 97);
  return out;
}

// 2x2 game whose entries are affine in the four probability variables.
inline pg::game::Nfpg random_linear_2x2(std::mt19937_64& rng) {
  const std::vector<std::vector<std::string>> acts{{"a", "b"}, {"c", "d"}};
  const std::vector<ProbVar> vars{{0, "a"}, {0, "b"}, {1, "c"}, {1, "d"}};
  std::vector<std::vector<PolyExpr>> u(2);
  for (auto& row : u)
    for (int j = 0; j < 4; ++j) {
      PolyExpr e(random_coef(rng, -5, 5, 4));
      for (const auto& v : vars) e += PolyExpr(random_coef(rng, -5, 5, 4)) * PolyExpr::variable(v);
      row.push_back(e);
    }
  return pg::game::Nfpg({"p1", "p2"}, acts, u);
}

// Constant 2x2 game in which (row, col) is strictly dominant for both players.
inline pg::game::Nfpg random_dominant_2x2(std::mt19937_64& rng, int row, int col) {
  std::uniform_int_distribution<int> d(-10, 10), gap(1, 5);
  std::vector<std::vector<int>> u1(2, std::vector<int>(2)), u2(2, std::vector<int>(2));
  for (int b = 0; b < 2; ++b) {
    u1[1 - row][b] = d(rng);
    u1[row][b] = u1[1 - row][b] + gap(rng);
  }
  for (int a = 0; a < 2; ++a) {
    u2[a][1 - col] = d(rng);
    u2[a][col] = u2[a][1 - col] + gap(rng);
  }
  std::vector<std::vector<PolyExpr>> u(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      u[0].emplace_back(Rational(u1[a][b]));
      u[1].emplace_back(Rational(u2[a][b]));
    }
  return pg::game::Nfpg({"p1", "p2"}, {{"u", "v"}, {"x", "y"}}, u);
}

}  // namespace oracle
