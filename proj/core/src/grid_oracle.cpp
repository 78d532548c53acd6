#include <algorithm>
#include <cmath>
#include <map>

#include "pgsolve/nlp.hpp"

namespace pg::nlp {

namespace {

// All distributions over m actions with probabilities k/res.
std::vector<std::vector<double>> simplex_grid(std::size_t m, int res) {
  std::vector<std::vector<double>> out;
  std::vector<int> c(m, 0);
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == m) {
      c[pos] = left;
      auto& p = out.emplace_back(m);
      for (std::size_t k = 0; k < m; ++k) p[k] = static_cast<double>(c[k]) / res;
      return;
    }
    for (int v = left; v >= 0; --v) {
      c[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, res);
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class Evaluator {
 public:
  explicit Evaluator(const game::Nfpg& g) : g_(g) {
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      offset_.push_back(dim_);
      dim_ += g.num_actions(i);
    }
    auto index_of = [&](const expr::ProbVar& v) {
      const auto& acts = g.actions(static_cast<std::size_t>(v.player));
      return static_cast<int>(offset_[static_cast<std::size_t>(v.player)] +
                              static_cast<std::size_t>(std::find(acts.begin(), acts.end(), v.action) - acts.begin()));
    };
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      auto& row = entries_.emplace_back();
      for (std::size_t j = 0; j < g.num_joint(); ++j) row.emplace_back(g.utility(i, j), index_of);
    }
    for (std::size_t j = 0; j < g.num_joint(); ++j) joints_.push_back(g.joint_actions(j));
    table_.assign(g.num_players(), std::vector<double>(g.num_joint()));
    dev_.resize(g.num_players());
    for (std::size_t i = 0; i < g.num_players(); ++i) dev_[i].assign(g.num_actions(i), 0.0);
  }

  std::size_t dim() const { return dim_; }
  std::size_t offset(std::size_t i) const { return offset_[i]; }

  // Deviation payoffs with beliefs frozen at x; fills dev_.
  const std::vector<std::vector<double>>& deviations(const std::vector<double>& x) {
    const std::size_t n = g_.num_players();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < g_.num_joint(); ++j) table_[i][j] = entries_[i][j].eval(x);
      std::fill(dev_[i].begin(), dev_[i].end(), 0.0);
    }
    for (std::size_t j = 0; j < g_.num_joint(); ++j) {
      const auto& a = joints_[j];
      for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        for (std::size_t k = 0; k < n && w != 0.0; ++k)
          if (k != i) w *= x[offset_[k] + static_cast<std::size_t>(a[k])];
        if (w != 0.0) dev_[i][static_cast<std::size_t>(a[i])] += table_[i][j] * w;
      }
    }
    return dev_;
  }

  double residual(const std::vector<double>& x, const game::Support& s) {
    const auto& dev = deviations(x);
    double r = 0.0;
    for (std::size_t i = 0; i < g_.num_players(); ++i) {
      double u = 0.0;
      for (std::size_t a = 0; a < g_.num_actions(i); ++a) u += x[offset_[i] + a] * dev[i][a];
      for (std::size_t a = 0; a < g_.num_actions(i); ++a) {
        double d = dev[i][a] - u;
        r = std::max(r, s.contains(i, a) ? std::abs(d) : d);
      }
    }
    return r;
  }

 private:
  const game::Nfpg& g_;
  std::size_t dim_ = 0;
  std::vector<std::size_t> offset_;
  std::vector<std::vector<expr::CompiledPoly>> entries_;
  std::vector<std::vector<int>> joints_;
  std::vector<std::vector<double>> table_;
  std::vector<std::vector<double>> dev_;
};

game::Support support_at(const game::Nfpg& g, const Evaluator& ev, const std::vector<double>& x) {
  game::Support s;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    std::uint32_t m = 0;
    for (std::size_t a = 0; a < g.num_actions(i); ++a)
      if (x[ev.offset(i) + a] > game::kSupportEpsilon) m |= 1u << a;
    s.masks.push_back(m);
  }
  return s;
}

// Solves the indifference conditions of support s near x. Unknowns are the
// supported probabilities of each mixing player except its last one.
class Refiner {
 public:
  Refiner(const game::Nfpg& g, Evaluator& ev, const game::Support& s) : g_(g), ev_(ev), s_(s) {
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      auto acts = s.actions(i);
      if (acts.size() < 2) continue;
      groups_.push_back({i, acts});
      dim_ += acts.size() - 1;
    }
  }

  std::optional<std::vector<double>> run(std::vector<double> x) const {
    if (dim_ == 0) return x;
    std::vector<double> y = coords(x);
    if (dim_ == 1) {
      if (auto b = bisect(x, y[0])) {
        y[0] = *b;
        return point(x, y);
      }
    }
    return newton(x, y);
  }

 private:
  struct Group {
    std::size_t player;
    std::vector<int> acts;
  };

  std::vector<double> coords(const std::vector<double>& x) const {
    std::vector<double> y;
    for (const auto& gr : groups_)
      for (std::size_t q = 0; q + 1 < gr.acts.size(); ++q)
        y.push_back(x[ev_.offset(gr.player) + static_cast<std::size_t>(gr.acts[q])]);
    return y;
  }

  std::vector<double> point(std::vector<double> x, const std::vector<double>& y) const {
    std::size_t k = 0;
    for (const auto& gr : groups_) {
      double rest = 1.0;
      for (std::size_t q = 0; q + 1 < gr.acts.size(); ++q) {
        x[ev_.offset(gr.player) + static_cast<std::size_t>(gr.acts[q])] = y[k];
        rest -= y[k++];
      }
      x[ev_.offset(gr.player) + static_cast<std::size_t>(gr.acts.back())] = rest;
    }
    return x;
  }

  std::vector<double> equations(const std::vector<double>& x, const std::vector<double>& y) const {
    auto p = point(x, y);
    const auto& dev = ev_.deviations(p);
    std::vector<double> f;
    for (const auto& gr : groups_) {
      double ref = dev[gr.player][static_cast<std::size_t>(gr.acts.back())];
      for (std::size_t q = 0; q + 1 < gr.acts.size(); ++q)
        f.push_back(dev[gr.player][static_cast<std::size_t>(gr.acts[q])] - ref);
    }
    return f;
  }

  static double norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  }

  // One-dimensional case: bracket a sign change near y0, then bisect.
  std::optional<double> bisect(const std::vector<double>& x, double y0) const {
    auto f = [&](double y) { return equations(x, {y})[0]; };
    double f0 = f(y0);
    if (f0 == 0.0) return y0;
    double lo = y0, flo = f0, hi = y0, fhi = f0;
    bool found = false;
    for (double d = 1e-3; d <= 0.05 + 1e-12 && !found; d *= 1.5) {
      for (double c : {y0 - d, y0 + d}) {
        if (c < 0.0 || c > 1.0) continue;
        double fc = f(c);
        if ((fc <= 0) != (f0 <= 0)) {
          lo = std::min(c, y0);
          hi = std::max(c, y0);
          flo = lo == y0 ? f0 : fc;
          fhi = hi == y0 ? f0 : fc;
          found = true;
          break;
        }
      }
    }
    if (!found) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      double mid = 0.5 * (lo + hi), fm = f(mid);
      if ((fm <= 0) == (flo <= 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
        fhi = fm;
      }
    }
    (void)fhi;
    double y = 0.5 * (lo + hi);
    if (std::abs(f(y)) > 1e-9) return std::nullopt;
    return y;
  }

  std::optional<std::vector<double>> newton(const std::vector<double>& x, std::vector<double> y) const {
    std::vector<double> f = equations(x, y);
    for (int it = 0; it < 60 && norm(f) > 1e-13; ++it) {
      // Central-difference Jacobian.
      std::vector<std::vector<double>> jac(dim_, std::vector<double>(dim_));
      for (std::size_t c = 0; c < dim_; ++c) {
        const double h = 1e-7;
        auto yp = y, ym = y;
        yp[c] += h;
        ym[c] -= h;
        auto fp = equations(x, yp), fm = equations(x, ym);
        for (std::size_t r = 0; r < dim_; ++r) jac[r][c] = (fp[r] - fm[r]) / (2 * h);
      }
      auto step = solve(jac, f);
      if (!step) return std::nullopt;
      double t = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
        auto yn = y;
        for (std::size_t k = 0; k < dim_; ++k) yn[k] -= t * (*step)[k];
        auto fn = equations(x, yn);
        if (norm(fn) < norm(f)) {
          y = yn;
          f = fn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (norm(f) > 1e-9) return std::nullopt;
    return point(x, y);
  }

  // Gaussian elimination with partial pivoting.
  static std::optional<std::vector<double>> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < n; ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      if (std::abs(a[piv][c]) < 1e-14) return std::nullopt;
      std::swap(a[c], a[piv]);
      std::swap(b[c], b[piv]);
      for (std::size_t r = c + 1; r < n; ++r) {
        double m = a[r][c] / a[c][c];
        for (std::size_t k = c; k < n; ++k) a[r][k] -= m * a[c][k];
        b[r] -= m * b[c];
      }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
      double s = b[r];
      for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
      x[r] = s / a[r][r];
    }
    return x;
  }

  const game::Nfpg& g_;
  Evaluator& ev_;
  const game::Support& s_;
  std::vector<Group> groups_;
  std::size_t dim_ = 0;
};

}  // namespace

std::vector<game::EquilibriumCandidate> grid_oracle(const game::Nfpg& g, int resolution, double tol) {
  if (resolution < 10) throw std::invalid_argument("grid resolution must be at least 10");
  if (!(tol > 0)) throw std::invalid_argument("grid tolerance must be positive");
  double total = 1.0;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    if (g.num_actions(i) > 3) throw std::invalid_argument("grid oracle supports at most 3 actions per player");
    total *= binomial(resolution + static_cast<int>(g.num_actions(i)) - 1, static_cast<int>(g.num_actions(i)) - 1);
  }
  if (total > 1e8) throw TooLarge("grid has " + std::to_string(static_cast<long long>(total)) + " points");

  std::vector<std::vector<std::vector<double>>> grids;
  for (std::size_t i = 0; i < g.num_players(); ++i) grids.push_back(simplex_grid(g.num_actions(i), resolution));

  Evaluator ev(g);
  const std::size_t n = g.num_players();
  constexpr std::size_t kKeep = 12;
  // Per support: lowest-residual grid points, ascending.
  std::map<game::Support, std::vector<std::pair<double, std::vector<double>>>> hits;

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(ev.dim());
  auto load = [&](std::size_t i) {
    const auto& p = grids[i][idx[i]];
    std::copy(p.begin(), p.end(), x.begin() + static_cast<std::ptrdiff_t>(ev.offset(i)));
  };
  for (std::size_t i = 0; i < n; ++i) load(i);
  for (;;) {
    auto s = support_at(g, ev, x);
    double r = ev.residual(x, s);
    if (r <= tol) {
      auto& list = hits[s];
      if (list.size() < kKeep || r < list.back().first) {
        auto pos = std::upper_bound(list.begin(), list.end(), r, [](double v, const auto& e) { return v < e.first; });
        list.insert(pos, {r, x});
        if (list.size() > kKeep) list.pop_back();
      }
    }
    std::size_t i = n;
    bool done = true;
    while (i-- > 0) {
      if (++idx[i] < grids[i].size()) {
        load(i);
        done = false;
        break;
      }
      idx[i] = 0;
      load(i);
    }
    if (done) break;
  }

  std::vector<game::EquilibriumCandidate> out;
  for (const auto& [s, list] : hits) {
    Refiner ref(g, ev, s);
    std::optional<game::EquilibriumCandidate> best;
    for (const auto& [r, pt] : list) {
      auto sol = ref.run(pt);
      if (!sol || support_at(g, ev, *sol) != s) continue;
      game::StrategyProfile p;
      for (std::size_t i = 0; i < n; ++i)
        p.probs.emplace_back(sol->begin() + static_cast<std::ptrdiff_t>(ev.offset(i)),
                             sol->begin() + static_cast<std::ptrdiff_t>(ev.offset(i) + g.num_actions(i)));
      bool valid = true;
      for (const auto& row : p.probs)
        for (double q : row) valid = valid && q >= -1e-12 && q <= 1 + 1e-12;
      if (!valid) continue;
      auto c = game::make_candidate(g, p);
      if (c.residual > game::kDefaultTolerance) continue;
      if (!best || c.welfare > best->welfare) best = std::move(c);
    }
    if (best) out.push_back(std::move(*best));
  }
  return out;
}

}  // namespace pg::nlp
