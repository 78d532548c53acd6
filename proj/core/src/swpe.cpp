#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "pgsolve/nlp.hpp"
#include "solver_internal.hpp"

namespace pg::nlp {

NoEquilibriumFound::NoEquilibriumFound(int inconclusive)
    : std::runtime_error("no equilibrium found (" + std::to_string(inconclusive) + " inconclusive supports)"),
      inconclusive_(inconclusive) {}

namespace {

struct Slot {
  SolveStatus status = SolveStatus::Inconclusive;
  int converged = 0;
  // Refined welfare optimum first, then the other converged local optima.
  std::vector<game::EquilibriumCandidate> candidates;
};

Slot solve_support(const std::shared_ptr<const game::Nfpg>& g, const game::Support& s, std::size_t index,
                   const SolverConfig& cfg) {
  SolverConfig sub = cfg;
  sub.seed = detail::splitmix64(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  auto prog = build_support_program(g, s, default_pivots(s));
  auto out = solve_program(prog, sub);
  Slot slot{out.status, out.starts_converged, {}};
  if (out.status == SolveStatus::Feasible) {
    auto refined = lexicographic_refine(prog, sub, out);
    slot.candidates.push_back(refined.candidate ? *refined.candidate : *out.candidate);
    for (const auto& [f, x] : out.local_optima)
      if (auto c = detail::candidate_from(prog, x, sub.feas_tol, sub.eps_lower)) slot.candidates.push_back(*c);
  }
  return slot;
}

// Higher welfare first, then player payoffs in index order.
bool preferred(const game::EquilibriumCandidate& a, const game::EquilibriumCandidate& b, double tol) {
  if (a.welfare > b.welfare + tol) return true;
  if (a.welfare < b.welfare - tol) return false;
  for (std::size_t i = 0; i < a.payoffs.size(); ++i) {
    if (a.payoffs[i] > b.payoffs[i] + tol) return true;
    if (a.payoffs[i] < b.payoffs[i] - tol) return false;
  }
  return false;
}

}  // namespace

SwpeResult find_swpe(const game::Nfpg& game, const SolverConfig& cfg) {
  cfg.validate();
  auto g = std::make_shared<const game::Nfpg>(game);
  auto supports = game::enumerate_supports(game);
  std::vector<Slot> slots(supports.size());

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), supports.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < supports.size(); ++k) slots[k] = solve_support(g, supports[k], k, cfg);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k; (k = next.fetch_add(1)) < supports.size();) {
          try {
            slots[k] = solve_support(g, supports[k], k, cfg);
          } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  SwpeResult result;
  for (std::size_t k = 0; k < supports.size(); ++k) {
    auto& slot = slots[k];
    result.supports.push_back({supports[k], slot.status, slot.converged});
    if (slot.status == SolveStatus::Inconclusive) ++result.inconclusive;
    // One candidate per realized support: a point whose small probabilities
    // were cut counts for the smaller support.
    for (auto& c : slot.candidates) {
      auto it = std::find_if(result.all.begin(), result.all.end(),
                             [&](const auto& o) { return o.support == c.support; });
      if (it == result.all.end())
        result.all.push_back(std::move(c));
      else if (preferred(c, *it, cfg.opt_tol))
        *it = std::move(c);
    }
  }
  if (result.all.empty()) throw NoEquilibriumFound(result.inconclusive);

  std::size_t best = 0;
  for (std::size_t k = 1; k < result.all.size(); ++k)
    if (preferred(result.all[k], result.all[best], cfg.opt_tol)) best = k;
  result.best = result.all[best];
  return result;
}

}  // namespace pg::nlp
