#include <stdexcept>

#include "pgsolve/nlp.hpp"

namespace pg::nlp {

void SolverConfig::validate() const {
  if (!(feas_tol > 0) || !(opt_tol > 0) || !(eps_lower > 0))
    throw std::invalid_argument("solver tolerances must be positive");
  if (starts < 1) throw std::invalid_argument("solver needs at least one start");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::vector<int> default_pivots(const game::Support& support) {
  std::vector<int> out;
  for (std::size_t i = 0; i < support.masks.size(); ++i) out.push_back(support.actions(i).at(0));
  return out;
}

SupportProgram build_support_program(const game::Nfpg& game, const game::Support& support,
                                     const std::vector<int>& pivots) {
  return build_support_program(std::make_shared<const game::Nfpg>(game), support, pivots);
}

SupportProgram build_support_program(std::shared_ptr<const game::Nfpg> gp, const game::Support& support,
                                     const std::vector<int>& pivots) {
  const game::Nfpg& g = *gp;
  const std::size_t n = g.num_players();
  if (support.masks.size() != n || pivots.size() != n)
    throw std::invalid_argument("support or pivots do not match the game's players");
  for (std::size_t i = 0; i < n; ++i) {
    if (support.masks[i] == 0 || (support.masks[i] >> g.num_actions(i)) != 0)
      throw std::invalid_argument("invalid support for player '" + g.players()[i] + "'");
    if (pivots[i] < 0 || static_cast<std::size_t>(pivots[i]) >= g.num_actions(i) ||
        !support.contains(i, static_cast<std::size_t>(pivots[i])))
      throw PivotNotInSupport("pivot of player '" + g.players()[i] + "' is not in its support");
  }

  SupportProgram prog;
  prog.game = gp;
  prog.support = support;
  prog.pivots = pivots;

  // Beliefs about unsupported actions are zero.
  expr::Assignment zeros;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < g.num_actions(i); ++a) {
      if (support.contains(i, a))
        prog.vars.push_back(g.var(i, a));
      else
        zeros[g.var(i, a)] = 0;
    }

  // dev[i][a]: payoff of player i for pure action a against the others' p-vars.
  std::vector<std::vector<expr::PolyExpr>> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i].assign(g.num_actions(i), expr::PolyExpr{});
  for (std::size_t j = 0; j < g.num_joint(); ++j) {
    auto a = g.joint_actions(j);
    for (std::size_t i = 0; i < n; ++i) {
      bool live = true;
      expr::PolyExpr weight(1);
      for (std::size_t k = 0; k < n && live; ++k) {
        if (k == i) continue;
        auto ak = static_cast<std::size_t>(a[k]);
        if (!support.contains(k, ak))
          live = false;
        else
          weight *= expr::PolyExpr::variable(g.var(k, ak));
      }
      if (!live) continue;
      dev[i][static_cast<std::size_t>(a[i])] += expr::substitute(g.utility(i, j), zeros) * weight;
    }
  }

  prog.objective = expr::PolyExpr{};
  for (std::size_t i = 0; i < n; ++i) {
    expr::PolyExpr u;
    for (int a : support.actions(i)) u += expr::PolyExpr::variable(g.var(i, static_cast<std::size_t>(a))) * dev[i][a];
    prog.payoffs.push_back(u);
    prog.objective += u;

    auto pivot = static_cast<std::size_t>(pivots[i]);
    for (std::size_t a = 0; a < g.num_actions(i); ++a) {
      if (a == pivot) continue;
      ConstraintTag tag{static_cast<int>(i), static_cast<int>(a)};
      if (support.contains(i, a)) {
        prog.eq_constraints.push_back(dev[i][pivot] - dev[i][a]);
        prog.eq_tags.push_back(tag);
      } else {
        prog.ineq_constraints.push_back(dev[i][pivot] - dev[i][a]);
        prog.ineq_tags.push_back(tag);
      }
    }
  }
  return prog;
}

}  // namespace pg::nlp
