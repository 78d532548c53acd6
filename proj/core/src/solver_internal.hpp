#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pgsolve/expr.hpp"
#include "pgsolve/nlp.hpp"

namespace pg::nlp::detail {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform();  // [0, 1)

 private:
  std::uint64_t state_;
};

// Objective and constraints over the program's vars.
struct Problem {
  expr::PolyExpr objective;
  std::vector<expr::PolyExpr> eqs;
  std::vector<expr::PolyExpr> ineqs;
};

// Problem with singleton-support players fixed at 1 and constant rows removed.
struct Reduced {
  bool infeasible = false;
  int n = 0;
  std::vector<std::vector<int>> groups;
  std::vector<int> free_of_var;
  std::vector<expr::ProbVar> free_vars;
  expr::PolyExpr f_exact;
  std::vector<expr::PolyExpr> h_exact, g_exact;
  expr::CompiledPoly f;
  std::vector<expr::CompiledPoly> h, g;
};

Reduced reduce(const SupportProgram& prog, const Problem& pb, double feas_tol);
std::vector<double> expand_point(const SupportProgram& prog, const Reduced& r, const std::vector<double>& x);
std::vector<double> restrict_point(const Reduced& r, const std::vector<double>& full);

struct MultiStart {
  int converged = 0;
  std::vector<std::pair<double, std::vector<double>>> optima;  // best first
};

MultiStart multistart(const Reduced& r, const SolverConfig& cfg, const std::vector<std::vector<double>>& seeds,
                      int random_starts);
bool isolated(const Reduced& r, const SolverConfig& cfg, const std::vector<double>& x);
bool certify_infeasible(const Reduced& r, double feas_tol);
expr::CompiledPoly compile_over_vars(const SupportProgram& prog, const expr::PolyExpr& e);
std::optional<game::EquilibriumCandidate> candidate_from(const SupportProgram& prog, const std::vector<double>& values,
                                                         double feas_tol, double eps_lower);

}  // namespace pg::nlp::detail
