#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgsolve/expr.hpp"
#include "pgsolve/game.hpp"

namespace pg::nlp {

struct SolverConfig {
  double feas_tol = 1e-6;
  double opt_tol = 1e-6;
  int starts = 64;
  int max_iters = 2000;
  std::uint64_t seed = 0;
  double eps_lower = 1e-8;
  // Worker threads for independent supports; results do not depend on it.
  int threads = 1;

  void validate() const;
};

class PivotNotInSupport : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Which deviation a constraint row compares against the pivot.
struct ConstraintTag {
  int player = 0;
  int action = 0;
};

// Welfare maximization over the product simplex restricted to one support,
// subject to pivot indifference (equalities) and no profitable deviation
// outside the support (inequalities). Unsupported actions are already
// substituted by 0.
struct SupportProgram {
  std::shared_ptr<const game::Nfpg> game;
  game::Support support;
  std::vector<int> pivots;
  std::vector<expr::ProbVar> vars;
  expr::PolyExpr objective;
  std::vector<expr::PolyExpr> payoffs;  // per player, same composition as the objective
  std::vector<expr::PolyExpr> eq_constraints;
  std::vector<ConstraintTag> eq_tags;
  std::vector<expr::PolyExpr> ineq_constraints;
  std::vector<ConstraintTag> ineq_tags;
};

enum class SolveStatus { Feasible, Infeasible, Inconclusive };

std::string to_string(SolveStatus s);

struct SolveOutcome {
  SolveStatus status = SolveStatus::Inconclusive;
  std::optional<game::EquilibriumCandidate> candidate;
  int starts_converged = 0;
  double objective = 0.0;
  // Values of prog.vars at the reported point.
  std::vector<double> point;
  // Distinct converged points with their objective values, best first.
  std::vector<std::pair<double, std::vector<double>>> local_optima;
};

SupportProgram build_support_program(std::shared_ptr<const game::Nfpg> game, const game::Support& support,
                                     const std::vector<int>& pivots);
SupportProgram build_support_program(const game::Nfpg& game, const game::Support& support,
                                     const std::vector<int>& pivots);
// Pivot of each player: the first supported action.
std::vector<int> default_pivots(const game::Support& support);

SolveOutcome solve_program(const SupportProgram& prog, const SolverConfig& cfg);

// Maximizes player payoffs in index order among points within opt_tol of welfare_opt.
SolveOutcome lexicographic_refine(const SupportProgram& prog, const SolverConfig& cfg, double welfare_opt);
SolveOutcome lexicographic_refine(const SupportProgram& prog, const SolverConfig& cfg, const SolveOutcome& incumbent);

class NoEquilibriumFound : public std::runtime_error {
 public:
  explicit NoEquilibriumFound(int inconclusive);
  int inconclusive() const { return inconclusive_; }

 private:
  int inconclusive_;
};

struct SupportReport {
  game::Support support;
  SolveStatus status = SolveStatus::Inconclusive;
  int starts_converged = 0;
};

struct SwpeResult {
  game::EquilibriumCandidate best;
  std::vector<game::EquilibriumCandidate> all;
  std::vector<SupportReport> supports;
  int inconclusive = 0;
};

SwpeResult find_swpe(const game::Nfpg& game, const SolverConfig& cfg);

// Brute-force scan of the product simplex on a grid with step 1/resolution.
// Grid points passing the equilibrium check at tol seed a local refinement of
// the support's indifference conditions; one refined candidate is returned per
// support, each re-verified at the default tolerance.
class TooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<game::EquilibriumCandidate> grid_oracle(const game::Nfpg& game, int resolution, double tol);

}  // namespace pg::nlp
