#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "pgsolve/nlp.hpp"
#include "solver_internal.hpp"

namespace pg::nlp {

namespace detail {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform() {
  state_ = splitmix64(state_);
  return static_cast<double>(state_ >> 11) * 0x1.0p-53;
}

}  // namespace detail

namespace {

using detail::Problem;
using detail::Reduced;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------- projection

void project_group(std::vector<double>& x, const std::vector<int>& idx, double eps) {
  const std::size_t m = idx.size();
  const double mass = 1.0 - static_cast<double>(m) * eps;
  std::vector<double> y(m);
  for (std::size_t k = 0; k < m; ++k) y[k] = x[idx[k]] - eps;
  std::vector<double> s = y;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    cum += s[k];
    double t = (cum - mass) / static_cast<double>(k + 1);
    if (k + 1 == m || s[k + 1] <= t) {
      tau = t;
      break;
    }
  }
  for (std::size_t k = 0; k < m; ++k) x[idx[k]] = std::max(y[k] - tau, 0.0) + eps;
}

// ---------------------------------------------------------------- local search

class LocalSolver {
 public:
  LocalSolver(const Reduced& r, const SolverConfig& cfg) : r_(r), cfg_(cfg), n_(static_cast<std::size_t>(r.n)) {}

  // Returns a KKT point satisfying the tolerances, if the start converges.
  std::optional<std::vector<double>> run(std::vector<double> x) {
    project(x);
    int budget = cfg_.max_iters;
    int p1 = std::min(std::max(budget / 8, 1), 150);
    budget -= penalty_phase(x, p1);
    return polish(x, std::max(budget, 1));
  }

  double objective(const std::vector<double>& x) const { return r_.f.eval(x); }

  // Projects x onto the equalities and the near-active inequalities.
  std::optional<std::vector<double>> snap(std::vector<double> x) const {
    WorkSet w;
    for (std::size_t l = 0; l < r_.g.size(); ++l)
      if (r_.g[l].eval(x) <= cfg_.feas_tol) w.ineq.push_back(static_cast<int>(l));
    if (!restore(x, w)) return std::nullopt;
    return x;
  }

  double violation(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& h : r_.h) v = std::max(v, std::abs(h.eval(x)));
    for (const auto& g : r_.g) v = std::max(v, -g.eval(x));
    return v;
  }

 private:
  void project(std::vector<double>& x) const {
    for (const auto& grp : r_.groups) project_group(x, grp, cfg_.eps_lower);
  }

  double l1_violation(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& h : r_.h) v += std::abs(h.eval(x));
    for (const auto& g : r_.g) v += std::max(0.0, -g.eval(x));
    return v;
  }

  double merit(const std::vector<double>& x, double rho, std::vector<double>* grad) const {
    if (!grad) return r_.f.eval(x) - rho * l1_violation(x);
    std::vector<double> tmp;
    double val = r_.f.eval_grad(x, *grad, n_);
    for (const auto& h : r_.h) {
      double hv = h.eval_grad(x, tmp, n_);
      val -= rho * std::abs(hv);
      double s = hv > 0 ? 1.0 : (hv < 0 ? -1.0 : 0.0);
      for (std::size_t k = 0; k < n_; ++k) (*grad)[k] -= rho * s * tmp[k];
    }
    for (const auto& g : r_.g) {
      double gv = g.eval_grad(x, tmp, n_);
      if (gv < 0) {
        val += rho * gv;
        for (std::size_t k = 0; k < n_; ++k) (*grad)[k] += rho * tmp[k];
      }
    }
    return val;
  }

  // Projected ascent on f - rho * violation; returns iterations used.
  int penalty_phase(std::vector<double>& x, int iters) const {
    double rho = 10.0, alpha = 1e-2;
    std::vector<double> grad, xn(n_);
    int stalls = 0, it = 0;
    for (; it < iters; ++it) {
      double val = merit(x, rho, &grad);
      bool accepted = false;
      double moved = 0.0;
      for (int bt = 0; bt < 40; ++bt) {
        for (std::size_t k = 0; k < n_; ++k) xn[k] = x[k] + alpha * grad[k];
        project(xn);
        double pred = 0.0;
        for (std::size_t k = 0; k < n_; ++k) pred += grad[k] * (xn[k] - x[k]);
        double valn = merit(xn, rho, nullptr);
        if (valn >= val + 1e-4 * pred && valn > val - 1e-15 * (1 + std::abs(val))) {
          accepted = true;
          for (std::size_t k = 0; k < n_; ++k) moved = std::max(moved, std::abs(xn[k] - x[k]));
          break;
        }
        alpha *= 0.5;
      }
      if (accepted) {
        x = xn;
        alpha = std::min(alpha * 2.0, 1e3);
      }
      if (!accepted || moved < 1e-9) {
        if (violation(x) > cfg_.feas_tol && rho < 1e8) {
          rho *= 2.0;
          alpha = 1e-2;
          if (++stalls > 40) break;
        } else {
          break;
        }
      }
    }
    return it;
  }

  struct WorkSet {
    std::vector<int> ineq;   // active inequality rows
    std::vector<int> bound;  // coordinates held at eps_lower
  };

  static bool has(const std::vector<int>& v, int k) { return std::find(v.begin(), v.end(), k) != v.end(); }

  // Rows: equalities, working inequalities, working bounds, group sums.
  void rows(const std::vector<double>& x, const WorkSet& w, VectorXd& res, MatrixXd& jac) const {
    const std::size_t m = r_.h.size() + w.ineq.size() + w.bound.size() + r_.groups.size();
    res.resize(static_cast<Eigen::Index>(m));
    jac.setZero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_));
    std::vector<double> tmp;
    Eigen::Index row = 0;
    auto put = [&](double v) {
      res(row) = v;
      for (std::size_t k = 0; k < n_; ++k) jac(row, static_cast<Eigen::Index>(k)) = tmp[k];
      ++row;
    };
    for (const auto& h : r_.h) put(h.eval_grad(x, tmp, n_));
    for (int l : w.ineq) put(r_.g[static_cast<std::size_t>(l)].eval_grad(x, tmp, n_));
    for (int b : w.bound) {
      res(row) = x[static_cast<std::size_t>(b)] - cfg_.eps_lower;
      jac(row, b) = 1.0;
      ++row;
    }
    for (const auto& grp : r_.groups) {
      double s = -1.0;
      for (int k : grp) {
        s += x[static_cast<std::size_t>(k)];
        jac(row, k) = 1.0;
      }
      res(row) = s;
      ++row;
    }
  }

  // Gauss-Newton projection onto the working manifold; grows the working set
  // with violated inequalities and bounds.
  bool restore(std::vector<double>& x, WorkSet& w) const {
    VectorXd res;
    MatrixXd jac;
    for (int it = 0; it < 40; ++it) {
      bool grew = false;
      for (std::size_t l = 0; l < r_.g.size(); ++l)
        if (!has(w.ineq, static_cast<int>(l)) && r_.g[l].eval(x) < -0.1 * cfg_.feas_tol) {
          w.ineq.push_back(static_cast<int>(l));
          grew = true;
        }
      for (std::size_t k = 0; k < n_; ++k)
        if (!has(w.bound, static_cast<int>(k)) && x[k] < cfg_.eps_lower * (1 - 1e-9)) {
          w.bound.push_back(static_cast<int>(k));
          grew = true;
        }
      rows(x, w, res, jac);
      double rn = res.lpNorm<Eigen::Infinity>();
      if (!grew && rn <= 1e-13) return true;
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(jac);
      VectorXd step = cod.solve(-res);
      if (!step.allFinite()) return false;
      for (std::size_t k = 0; k < n_; ++k) x[k] += step(static_cast<Eigen::Index>(k));
      if (!grew && step.lpNorm<Eigen::Infinity>() <= 1e-15) break;
    }
    rows(x, w, res, jac);
    return res.lpNorm<Eigen::Infinity>() <= 1e-2 * cfg_.feas_tol && violation(x) <= cfg_.feas_tol &&
           *std::min_element(x.begin(), x.end()) >= cfg_.eps_lower * (1 - 1e-6);
  }

  std::optional<std::vector<double>> polish(std::vector<double> x, int budget) const {
    WorkSet w;
    for (std::size_t l = 0; l < r_.g.size(); ++l)
      if (r_.g[l].eval(x) <= cfg_.feas_tol) w.ineq.push_back(static_cast<int>(l));
    for (std::size_t k = 0; k < n_; ++k)
      if (x[k] <= cfg_.eps_lower * (1 + 1e-6)) w.bound.push_back(static_cast<int>(k));
    if (!restore(x, w)) {
      // Retry from the plain working set of equalities.
      w = {};
      if (!restore(x, w)) return std::nullopt;
    }

    VectorXd res;
    MatrixXd jac;
    std::vector<double> gf, d(n_), prev_x, prev_d;
    double alpha = 1e-2;
    int drops = 0;
    for (int it = 0; it < budget; ++it) {
      double fx = r_.f.eval_grad(x, gf, n_);
      rows(x, w, res, jac);
      VectorXd gvec = Eigen::Map<const VectorXd>(gf.data(), static_cast<Eigen::Index>(n_));
      VectorXd lambda = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(jac.transpose()).solve(gvec);
      VectorXd dv = gvec - jac.transpose() * lambda;
      for (std::size_t k = 0; k < n_; ++k) d[k] = dv(static_cast<Eigen::Index>(k));
      double dn = inf_norm(d);
      const double scale = 1.0 + std::abs(fx);

      if (dn <= cfg_.opt_tol) {
        // Inequality multipliers must have the maximization sign (<= 0).
        const Eigen::Index off = static_cast<Eigen::Index>(r_.h.size());
        double worst = cfg_.opt_tol;
        int kind = -1;
        std::size_t pos = 0;
        for (std::size_t q = 0; q < w.ineq.size(); ++q)
          if (lambda(off + static_cast<Eigen::Index>(q)) > worst) {
            worst = lambda(off + static_cast<Eigen::Index>(q));
            kind = 0;
            pos = q;
          }
        const Eigen::Index boff = off + static_cast<Eigen::Index>(w.ineq.size());
        for (std::size_t q = 0; q < w.bound.size(); ++q)
          if (lambda(boff + static_cast<Eigen::Index>(q)) > worst) {
            worst = lambda(boff + static_cast<Eigen::Index>(q));
            kind = 1;
            pos = q;
          }
        if (kind < 0) return x;
        if (++drops > 8 * static_cast<int>(n_ + r_.g.size()) + 16) return std::nullopt;
        if (kind == 0)
          w.ineq.erase(w.ineq.begin() + static_cast<std::ptrdiff_t>(pos));
        else
          w.bound.erase(w.bound.begin() + static_cast<std::ptrdiff_t>(pos));
        prev_x.clear();
        continue;
      }

      if (!prev_x.empty()) {
        double ss = 0.0, sy = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
          double s = x[k] - prev_x[k], y = d[k] - prev_d[k];
          ss += s * s;
          sy += s * y;
        }
        if (sy < -1e-300) alpha = std::clamp(ss / -sy, 1e-10, 1e4);
      }

      // Largest step keeping inactive inequalities and bounds satisfied to first order.
      double amax = kInf;
      int block_kind = -1, block_idx = -1;
      std::vector<double> tmp;
      for (std::size_t l = 0; l < r_.g.size(); ++l) {
        if (has(w.ineq, static_cast<int>(l))) continue;
        double gv = r_.g[l].eval_grad(x, tmp, n_);
        double slope = dot(tmp, d);
        if (slope < 0) {
          double a = std::max(gv, 0.0) / -slope;
          if (a < amax) {
            amax = a;
            block_kind = 0;
            block_idx = static_cast<int>(l);
          }
        }
      }
      for (std::size_t k = 0; k < n_; ++k) {
        if (has(w.bound, static_cast<int>(k)) || d[k] >= 0) continue;
        double a = std::max(x[k] - cfg_.eps_lower, 0.0) / -d[k];
        if (a < amax) {
          amax = a;
          block_kind = 1;
          block_idx = static_cast<int>(k);
        }
      }

      double slope = dot(gf, d);
      bool accepted = false;
      std::vector<double> xt;
      WorkSet wt;
      for (int bt = 0; bt < 60; ++bt) {
        bool blocked = alpha >= amax;
        double a = blocked ? amax : alpha;
        xt = x;
        for (std::size_t k = 0; k < n_; ++k) xt[k] += a * d[k];
        wt = w;
        if (blocked) (block_kind == 0 ? wt.ineq : wt.bound).push_back(block_idx);
        if (restore(xt, wt)) {
          double ft = r_.f.eval(xt);
          if (ft >= fx + 1e-4 * a * slope - 1e-13 * scale || (blocked && ft >= fx - 1e-13 * scale)) {
            accepted = true;
            break;
          }
        }
        alpha = a * 0.5;
        if (alpha < 1e-16) break;
      }
      if (!accepted) return std::nullopt;
      prev_x = x;
      prev_d = d;
      x = xt;
      w = wt;
    }
    return std::nullopt;
  }

  const Reduced& r_;
  const SolverConfig& cfg_;
  std::size_t n_;
};

std::vector<double> dirichlet_start(const Reduced& r, detail::Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(r.n), 0.0);
  for (const auto& grp : r.groups) {
    double s = 0.0;
    for (int k : grp) {
      double u = rng.uniform();
      double e = -std::log1p(-u);
      x[static_cast<std::size_t>(k)] = e;
      s += e;
    }
    for (int k : grp) x[static_cast<std::size_t>(k)] /= s;
  }
  return x;
}

}  // namespace

namespace detail {

Reduced reduce(const SupportProgram& prog, const Problem& pb, double feas_tol) {
  Reduced r;
  const auto& g = *prog.game;
  expr::Assignment fixed;
  std::map<expr::ProbVar, int> free_index;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    auto acts = prog.support.actions(i);
    if (acts.size() == 1) {
      fixed[g.var(i, static_cast<std::size_t>(acts[0]))] = 1;
      continue;
    }
    auto& grp = r.groups.emplace_back();
    for (int a : acts) {
      auto v = g.var(i, static_cast<std::size_t>(a));
      free_index[v] = r.n;
      r.free_vars.push_back(v);
      grp.push_back(r.n++);
    }
  }
  for (const auto& v : prog.vars) {
    auto it = free_index.find(v);
    r.free_of_var.push_back(it == free_index.end() ? -1 : it->second);
  }
  auto index_of = [&](const expr::ProbVar& v) { return free_index.at(v); };

  r.f_exact = expr::substitute(pb.objective, fixed);
  r.f = expr::CompiledPoly(r.f_exact, index_of);
  for (const auto& e : pb.eqs) {
    auto s = expr::substitute(e, fixed);
    if (s.is_constant()) {
      if (abs(s.constant_term()) > feas_tol) r.infeasible = true;
      continue;
    }
    r.h_exact.push_back(s);
    r.h.emplace_back(s, index_of);
  }
  for (const auto& e : pb.ineqs) {
    auto s = expr::substitute(e, fixed);
    if (s.is_constant()) {
      if (s.constant_term() < -feas_tol) r.infeasible = true;
      continue;
    }
    r.g_exact.push_back(s);
    r.g.emplace_back(s, index_of);
  }
  return r;
}

std::vector<double> expand_point(const SupportProgram& prog, const Reduced& r, const std::vector<double>& x) {
  std::vector<double> out(prog.vars.size(), 1.0);
  for (std::size_t k = 0; k < prog.vars.size(); ++k)
    if (r.free_of_var[k] >= 0) out[k] = x[static_cast<std::size_t>(r.free_of_var[k])];
  return out;
}

std::vector<double> restrict_point(const Reduced& r, const std::vector<double>& full) {
  std::vector<double> x(static_cast<std::size_t>(r.n));
  for (std::size_t k = 0; k < r.free_of_var.size(); ++k)
    if (r.free_of_var[k] >= 0) x[static_cast<std::size_t>(r.free_of_var[k])] = full[k];
  return x;
}

MultiStart multistart(const Reduced& r, const SolverConfig& cfg, const std::vector<std::vector<double>>& seeds,
                      int random_starts) {
  MultiStart out;
  LocalSolver solver(r, cfg);
  auto consider = [&](std::vector<double> x0) {
    auto sol = solver.run(std::move(x0));
    if (!sol) return;
    ++out.converged;
    double fv = solver.objective(*sol);
    for (auto& [f, p] : out.optima) {
      double dist = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) dist = std::max(dist, std::abs(p[k] - (*sol)[k]));
      if (dist <= 1e-6) {
        if (fv > f) {
          f = fv;
          p = *sol;
        }
        return;
      }
    }
    out.optima.emplace_back(fv, std::move(*sol));
  };
  for (const auto& s : seeds) consider(s);
  for (int k = 0; k < random_starts; ++k) {
    Rng rng(splitmix64(cfg.seed + static_cast<std::uint64_t>(k)));
    consider(dirichlet_start(r, rng));
  }
  std::stable_sort(out.optima.begin(), out.optima.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  return out;
}

bool isolated(const Reduced& r, const SolverConfig& cfg, const std::vector<double>& x) {
  std::vector<std::vector<double>> grads;
  std::vector<double> tmp;
  for (const auto& h : r.h) {
    h.eval_grad(x, tmp, static_cast<std::size_t>(r.n));
    grads.push_back(tmp);
  }
  for (const auto& g : r.g)
    if (std::abs(g.eval_grad(x, tmp, static_cast<std::size_t>(r.n))) <= 10 * cfg.feas_tol) grads.push_back(tmp);
  for (int k = 0; k < r.n; ++k)
    if (x[static_cast<std::size_t>(k)] <= cfg.eps_lower * (1 + 1e-6)) {
      tmp.assign(static_cast<std::size_t>(r.n), 0.0);
      tmp[static_cast<std::size_t>(k)] = 1.0;
      grads.push_back(tmp);
    }
  for (const auto& grp : r.groups) {
    tmp.assign(static_cast<std::size_t>(r.n), 0.0);
    for (int k : grp) tmp[static_cast<std::size_t>(k)] = 1.0;
    grads.push_back(tmp);
  }
  MatrixXd jac(static_cast<Eigen::Index>(grads.size()), r.n);
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (int k = 0; k < r.n; ++k) jac(static_cast<Eigen::Index>(i), k) = grads[i][static_cast<std::size_t>(k)];
  Eigen::FullPivLU<MatrixXd> lu(jac);
  lu.setThreshold(1e-9);
  return lu.rank() == r.n;
}

// Interval bounds over boxes of the reduced simplex coordinates: the last
// variable of each group is eliminated so boxes live in [0,1]^d.
bool certify_infeasible(const Reduced& r, double feas_tol) {
  std::map<expr::ProbVar, expr::PolyExpr> elim;
  std::vector<expr::ProbVar> coords;
  std::vector<std::vector<int>> sums;
  for (const auto& grp : r.groups) {
    expr::PolyExpr last(1);
    auto& sum = sums.emplace_back();
    for (std::size_t q = 0; q + 1 < grp.size(); ++q) {
      const auto& v = r.free_vars[static_cast<std::size_t>(grp[q])];
      sum.push_back(static_cast<int>(coords.size()));
      coords.push_back(v);
      last -= expr::PolyExpr::variable(v);
    }
    elim[r.free_vars[static_cast<std::size_t>(grp.back())]] = last;
  }
  const int d = static_cast<int>(coords.size());
  if (d == 0 || d > 4) return false;
  auto index_of = [&](const expr::ProbVar& v) {
    return static_cast<int>(std::find(coords.begin(), coords.end(), v) - coords.begin());
  };
  std::vector<expr::CompiledPoly> hs, gs;
  for (const auto& h : r.h_exact) hs.emplace_back(expr::compose(h, elim), index_of);
  for (const auto& g : r.g_exact) gs.emplace_back(expr::compose(g, elim), index_of);

  struct Box {
    std::vector<double> lo, hi;
    int depth;
  };
  std::vector<Box> stack{{std::vector<double>(static_cast<std::size_t>(d), 0.0),
                          std::vector<double>(static_cast<std::size_t>(d), 1.0), 0}};
  long budget = 200000;
  while (!stack.empty()) {
    Box b = std::move(stack.back());
    stack.pop_back();
    if (--budget < 0) return false;
    bool pruned = false;
    for (const auto& s : sums) {
      double lo = 0.0;
      for (int k : s) lo += b.lo[static_cast<std::size_t>(k)];
      if (lo > 1.0 + 1e-12) pruned = true;
    }
    for (const auto& h : hs) {
      if (pruned) break;
      auto [a, c] = h.range(b.lo, b.hi);
      if (a > feas_tol || c < -feas_tol) pruned = true;
    }
    for (const auto& g : gs) {
      if (pruned) break;
      if (g.range(b.lo, b.hi).second < -feas_tol) pruned = true;
    }
    if (pruned) continue;
    if (b.depth >= 14) return false;
    // Split along every axis.
    for (int mask = 0; mask < (1 << d); ++mask) {
      Box c{b.lo, b.hi, b.depth + 1};
      for (int k = 0; k < d; ++k) {
        double mid = 0.5 * (b.lo[static_cast<std::size_t>(k)] + b.hi[static_cast<std::size_t>(k)]);
        if ((mask >> k) & 1)
          c.lo[static_cast<std::size_t>(k)] = mid;
        else
          c.hi[static_cast<std::size_t>(k)] = mid;
      }
      stack.push_back(std::move(c));
    }
  }
  return true;
}

expr::CompiledPoly compile_over_vars(const SupportProgram& prog, const expr::PolyExpr& e) {
  return expr::CompiledPoly(e, [&](const expr::ProbVar& v) {
    return static_cast<int>(std::find(prog.vars.begin(), prog.vars.end(), v) - prog.vars.begin());
  });
}

std::optional<game::EquilibriumCandidate> candidate_from(const SupportProgram& prog,
                                                         const std::vector<double>& values, double feas_tol,
                                                         double eps_lower) {
  const auto& g = *prog.game;
  game::StrategyProfile p;
  for (std::size_t i = 0; i < g.num_players(); ++i) p.probs.emplace_back(g.num_actions(i), 0.0);
  for (std::size_t k = 0; k < prog.vars.size(); ++k) {
    const auto& v = prog.vars[k];
    const auto& acts = g.actions(static_cast<std::size_t>(v.player));
    auto a = static_cast<std::size_t>(std::find(acts.begin(), acts.end(), v.action) - acts.begin());
    p.probs[static_cast<std::size_t>(v.player)][a] = values[k];
  }
  const double cut = std::max(game::kSupportEpsilon, eps_lower) * (1 + 1e-6);
  bool collapsed = false;
  for (auto& row : p.probs) {
    double s = 0.0;
    for (double& q : row) {
      if (q <= cut && q != 0.0) {
        q = 0.0;
        collapsed = true;
      }
      s += q;
    }
    if (s <= 0) return std::nullopt;
    for (double& q : row) q /= s;
  }
  auto c = game::make_candidate(g, p);
  if (c.residual <= feas_tol) return c;
  if (!collapsed) return std::nullopt;

  // Cutting tiny probabilities moves the point off the smaller support's
  // indifference conditions; project it back.
  const game::Support sub = game::support_of(p, cut);
  auto sp = build_support_program(prog.game, sub, default_pivots(sub));
  Reduced r = reduce(sp, Problem{sp.objective, sp.eq_constraints, sp.ineq_constraints}, feas_tol);
  if (r.infeasible) return std::nullopt;
  if (r.n > 0) {
    std::vector<double> full;
    for (const auto& v : sp.vars) {
      const auto& acts = g.actions(static_cast<std::size_t>(v.player));
      auto a = static_cast<std::size_t>(std::find(acts.begin(), acts.end(), v.action) - acts.begin());
      full.push_back(p.probs[static_cast<std::size_t>(v.player)][a]);
    }
    SolverConfig cfg;
    cfg.feas_tol = feas_tol;
    cfg.eps_lower = eps_lower;
    auto y = LocalSolver(r, cfg).snap(restrict_point(r, full));
    if (!y) return std::nullopt;
    return candidate_from(sp, expand_point(sp, r, *y), feas_tol, eps_lower);
  }
  return std::nullopt;
}

}  // namespace detail

using namespace detail;

namespace {

Problem base_problem(const SupportProgram& prog) {
  return Problem{prog.objective, prog.eq_constraints, prog.ineq_constraints};
}

SolveOutcome finish(const SupportProgram& prog, const Reduced& r, const SolverConfig& cfg, MultiStart ms) {
  SolveOutcome out;
  out.starts_converged = ms.converged;
  for (const auto& [f, x] : ms.optima) {
    auto full = expand_point(prog, r, x);
    if (!out.candidate) {
      if (auto c = candidate_from(prog, full, cfg.feas_tol, cfg.eps_lower)) {
        out.status = SolveStatus::Feasible;
        out.candidate = std::move(c);
        out.objective = f;
        out.point = full;
      }
    }
    out.local_optima.emplace_back(f, full);
  }
  if (!out.candidate) {
    out.status = ms.converged == 0 && certify_infeasible(r, cfg.feas_tol) ? SolveStatus::Infeasible
                                                                           : SolveStatus::Inconclusive;
  }
  return out;
}

}  // namespace

SolveOutcome solve_program(const SupportProgram& prog, const SolverConfig& cfg) {
  cfg.validate();
  Reduced r = reduce(prog, base_problem(prog), cfg.feas_tol);
  if (r.infeasible) {
    SolveOutcome out;
    out.status = SolveStatus::Infeasible;
    return out;
  }
  if (r.n == 0) {
    MultiStart ms;
    if (LocalSolver(r, cfg).violation({}) <= cfg.feas_tol) {
      ms.converged = 1;
      ms.optima.emplace_back(r.f.eval({}), std::vector<double>{});
    }
    SolveOutcome out = finish(prog, r, cfg, std::move(ms));
    if (!out.candidate) out.status = SolveStatus::Infeasible;
    return out;
  }
  return finish(prog, r, cfg, multistart(r, cfg, {}, cfg.starts));
}

SolveOutcome lexicographic_refine(const SupportProgram& prog, const SolverConfig& cfg, double welfare_opt) {
  SolveOutcome inc = solve_program(prog, cfg);
  if (inc.status != SolveStatus::Feasible) return inc;
  inc.objective = welfare_opt;
  return lexicographic_refine(prog, cfg, inc);
}

SolveOutcome lexicographic_refine(const SupportProgram& prog, const SolverConfig& cfg, const SolveOutcome& inc) {
  cfg.validate();
  if (inc.status != SolveStatus::Feasible) return inc;
  const double welfare_opt = inc.objective;
  Reduced base = reduce(prog, base_problem(prog), cfg.feas_tol);
  if (base.n == 0) return inc;

  const auto& g = *prog.game;
  std::vector<expr::CompiledPoly> pay;
  for (const auto& u : prog.payoffs) pay.push_back(compile_over_vars(prog, u));
  const expr::CompiledPoly welfare = compile_over_vars(prog, prog.objective);

  // Points already known to attain the welfare level.
  std::vector<std::vector<double>> window;
  for (const auto& [f, x] : inc.local_optima)
    if (f >= welfare_opt - cfg.opt_tol) window.push_back(x);
  if (window.empty()) window.push_back(inc.point);

  auto lex_better = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (const auto& u : pay) {
      double ua = u.eval(a), ub = u.eval(b);
      if (ua > ub + cfg.opt_tol) return true;
      if (ua < ub - cfg.opt_tol) return false;
    }
    return false;
  };

  auto outcome_at = [&](const std::vector<double>& full) {
    SolveOutcome out = inc;
    if (auto c = candidate_from(prog, full, cfg.feas_tol, cfg.eps_lower)) {
      out.candidate = std::move(c);
      out.point = full;
      out.objective = welfare.eval(full);
    }
    return out;
  };

  bool all_isolated = true;
  for (const auto& x : window)
    if (!isolated(base, cfg, restrict_point(base, x))) {
      all_isolated = false;
      break;
    }
  if (all_isolated) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < window.size(); ++k)
      if (lex_better(window[k], window[best])) best = k;
    return outcome_at(window[best]);
  }

  std::vector<double> current = window.front();
  for (std::size_t k = 1; k < window.size(); ++k)
    if (lex_better(window[k], current)) current = window[k];
  std::vector<double> levels;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    Problem pb = base_problem(prog);
    pb.objective = prog.payoffs[i];
    pb.ineqs.push_back(prog.objective - expr::PolyExpr(from_double(welfare_opt - cfg.opt_tol)));
    for (std::size_t j = 0; j < i; ++j)
      pb.ineqs.push_back(prog.payoffs[j] - expr::PolyExpr(from_double(levels[j] - cfg.opt_tol)));
    Reduced r = reduce(prog, pb, cfg.feas_tol);
    if (!r.infeasible && !prog.payoffs[i].is_constant()) {
      std::vector<std::vector<double>> seeds;
      seeds.push_back(restrict_point(r, current));
      for (const auto& x : window) seeds.push_back(restrict_point(r, x));
      SolverConfig sub = cfg;
      sub.seed = splitmix64(cfg.seed ^ (0x5bd1e995ULL * (i + 1)));
      auto ms = multistart(r, sub, seeds, std::max(4, cfg.starts / 4));
      for (const auto& [f, x] : ms.optima) {
        auto full = expand_point(prog, r, x);
        if (candidate_from(prog, full, cfg.feas_tol, cfg.eps_lower)) {
          if (f > pay[i].eval(current) - cfg.opt_tol) current = full;
          break;
        }
      }
    }
    levels.push_back(pay[i].eval(current));
  }
  SolveOutcome out = outcome_at(current);
  return out.candidate ? out : inc;
}

}  // namespace pg::nlp
