#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgsolve/expr.hpp"
#include "pgsolve/game.hpp"
#include "pgsolve/nlp.hpp"
#include "pgsolve/rational.hpp"

namespace pg::pcsg {

using State = std::vector<int>;

std::string to_string(const State& s, const std::vector<std::string>& var_names);

// Everything the game offers in one state. Joint actions are indexed as in
// game::Nfpg (last player fastest) over the available action lists.
struct StateInfo {
  std::vector<std::vector<std::string>> actions;
  std::vector<std::vector<std::pair<State, Rational>>> transitions;  // per joint action
  std::vector<std::vector<expr::PolyExpr>> action_rewards;          // [player][joint]
  std::vector<Rational> state_rewards;                              // per player
};

// Source of states and their local structure; implemented by the DSL
// elaborator and by hand-written models.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual std::vector<std::string> players() const = 0;
  virtual std::vector<std::string> variables() const = 0;
  virtual State initial() const = 0;
  virtual StateInfo expand(const State& s) const = 0;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Pcsg {
 public:
  explicit Pcsg(std::shared_ptr<const Dynamics> dyn);

  const std::vector<std::string>& players() const { return players_; }
  const std::vector<std::string>& variables() const { return variables_; }
  State initial() const { return dyn_->initial(); }
  // Validated local structure: distributions sum to one, rewards local.
  StateInfo expand(const State& s) const;

 private:
  std::shared_ptr<const Dynamics> dyn_;
  std::vector<std::string> players_;
  std::vector<std::string> variables_;
};

// States reachable from the initial state within a step bound.
struct StateSpace {
  std::vector<State> states;  // breadth-first order, initial first
  std::vector<int> depth;     // fewest steps from the initial state
  std::vector<StateInfo> info;
  // successors[s][joint]: (state index, probability)
  std::vector<std::vector<std::vector<std::pair<int, double>>>> successors;
  std::map<State, int> index;
  int bound = 0;
};

StateSpace explore(const Pcsg& g, int k);

struct ModelStats {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
};

ModelStats model_stats(const Pcsg& g, int k);
ModelStats model_stats(const StateSpace& space);

class MissingContinuation : public std::runtime_error {
 public:
  explicit MissingContinuation(const std::string& state);
};

using Continuation = std::map<State, std::vector<double>>;

game::Nfpg build_stage_game(const Pcsg& g, const State& s, const Continuation& cont);
game::Nfpg build_stage_game(const Pcsg& g, const StateInfo& info, const State& s, const Continuation& cont);

struct Selection {
  enum class Kind { SwOptimal, RandomUniform } kind = Kind::SwOptimal;
  std::uint64_t seed = 0;

  static Selection sw_optimal() { return {}; }
  static Selection random_uniform(std::uint64_t seed) { return {Kind::RandomUniform, seed}; }
};

struct ValueTable {
  int horizon = 0;
  StateSpace space;
  // values[t][s] for states solved at t steps remaining (all states at t = 0).
  std::vector<std::map<int, std::vector<double>>> values;
  // strategies[t][s] for t >= 1.
  std::vector<std::map<int, game::EquilibriumCandidate>> strategies;
  // Number of candidates the selection chose from at (t, s).
  std::vector<std::map<int, int>> choices;

  const std::vector<double>& initial_values() const { return values.at(static_cast<std::size_t>(horizon)).at(0); }
  Continuation continuation(int t) const;
};

class StageFailure : public std::runtime_error {
 public:
  StageFailure(int t, std::string state, int inconclusive);
  int steps_remaining() const { return t_; }
  const std::string& state() const { return state_; }
  int inconclusive() const { return inconclusive_; }

 private:
  int t_;
  std::string state_;
  int inconclusive_;
};

ValueTable backward_induction(const Pcsg& g, int k, const nlp::SolverConfig& cfg, Selection select);

// Action probabilities are accumulated per class: "all" weights every state
// by its probability of being visited at each step, "step<j>" only step j.
struct ExperimentReport {
  int runs = 0;
  int horizon = 0;
  std::vector<std::string> players;
  std::vector<std::vector<double>> run_utilities;  // [run][player]
  std::vector<double> utility_mean;
  std::vector<double> utility_stddev;
  // (class, action) -> per-run values and their mean.
  std::map<std::pair<std::string, std::string>, std::vector<double>> action_prob_runs;
  std::map<std::pair<std::string, std::string>, double> action_prob_mean;
};

ExperimentReport run_experiments(const Pcsg& g, int k, int runs, const nlp::SolverConfig& cfg, std::uint64_t seed);

// Expected per-step visit weights of each state under the stored strategies,
// starting from the initial state with k steps remaining.
std::vector<std::map<int, double>> visit_distribution(const ValueTable& vt);

}  // namespace pg::pcsg
