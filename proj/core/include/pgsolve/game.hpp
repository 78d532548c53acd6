#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgsolve/expr.hpp"
#include "pgsolve/rational.hpp"

namespace pg::game {

inline constexpr const char* kIdleAction = "idle";
inline constexpr double kSupportEpsilon = 1e-8;
inline constexpr double kDefaultTolerance = 1e-6;
inline constexpr double kProbEpsilon = 1e-9;

class GameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ProfileShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Normal-form game whose utility entries are polynomials in the players'
// action probabilities. Entries are stored per player in joint-action order,
// with the last player's action varying fastest.
class Nfpg {
 public:
  Nfpg(std::vector<std::string> players, std::vector<std::vector<std::string>> actions,
       std::vector<std::vector<expr::PolyExpr>> utility);

  std::size_t num_players() const { return players_.size(); }
  const std::vector<std::string>& players() const { return players_; }
  const std::vector<std::string>& actions(std::size_t player) const { return actions_[player]; }
  std::size_t num_actions(std::size_t player) const { return actions_[player].size(); }
  std::size_t num_joint() const { return num_joint_; }

  std::size_t joint_index(const std::vector<int>& action_indices) const;
  std::vector<int> joint_actions(std::size_t joint) const;

  const expr::PolyExpr& utility(std::size_t player, std::size_t joint) const { return utility_[player][joint]; }
  const std::vector<std::vector<expr::PolyExpr>>& utility_table() const { return utility_; }

  expr::ProbVar var(std::size_t player, std::size_t action) const;
  const std::set<expr::ProbVar>& vocabulary() const { return vocab_; }
  // Locates an action by name as (player, action index).
  std::optional<std::pair<int, int>> find_action(const std::string& name) const;

  bool is_classical() const;

  friend bool operator==(const Nfpg&, const Nfpg&) = default;

 private:
  std::vector<std::string> players_;
  std::vector<std::vector<std::string>> actions_;
  std::vector<std::vector<expr::PolyExpr>> utility_;
  std::set<expr::ProbVar> vocab_;
  std::size_t num_joint_ = 1;
};

// probs[i][a] is the probability that player i plays action a.
template <class T>
struct BasicProfile {
  std::vector<std::vector<T>> probs;
  friend bool operator==(const BasicProfile&, const BasicProfile&) = default;
};

using StrategyProfile = BasicProfile<double>;
using ExactProfile = BasicProfile<Rational>;

StrategyProfile to_double(const ExactProfile& p);
ExactProfile to_exact(const StrategyProfile& p);
StrategyProfile pure_profile(const Nfpg& g, const std::vector<int>& actions);
// Builds a profile from action-name probabilities; unnamed actions of a player
// share the remaining mass when exactly one is missing, else default to zero.
StrategyProfile profile_from_names(const Nfpg& g, const std::vector<std::pair<std::string, double>>& named);

void check_shape(const Nfpg& g, const std::vector<std::vector<double>>& p);
void check_shape(const Nfpg& g, const std::vector<std::vector<Rational>>& p);
// Nonnegative entries summing to 1 within kProbEpsilon per player.
bool is_distribution(const StrategyProfile& p);

// Per-player action subsets as bitmasks over the player's action list.
struct Support {
  std::vector<std::uint32_t> masks;

  bool contains(std::size_t player, std::size_t action) const { return (masks[player] >> action) & 1u; }
  std::vector<int> actions(std::size_t player) const;
  std::size_t size(std::size_t player) const;
  friend bool operator==(const Support&, const Support&) = default;
  friend auto operator<=>(const Support&, const Support&) = default;
};

Support support_of(const StrategyProfile& p, double eps = kSupportEpsilon);
// "{a2,r2} x {r3}" style rendering.
std::string to_string(const Nfpg& g, const Support& s);

struct EquilibriumCandidate {
  StrategyProfile profile;
  std::vector<double> payoffs;
  double welfare = 0.0;
  Support support;
  double residual = 0.0;
};

// Numeric utility table [player][joint] with beliefs frozen at the profile.
template <class T>
using NumericGame = std::vector<std::vector<T>>;

NumericGame<double> instantiate(const Nfpg& g, const StrategyProfile& belief);
NumericGame<Rational> instantiate(const Nfpg& g, const ExactProfile& belief);

std::vector<double> expected_utility(const Nfpg& g, const StrategyProfile& belief, const StrategyProfile& play);
std::vector<Rational> expected_utility(const Nfpg& g, const ExactProfile& belief, const ExactProfile& play);

// Expected utility of a numeric game under a play profile.
std::vector<double> expected_utility(const Nfpg& g, const NumericGame<double>& table, const StrategyProfile& play);
// dev[i][a]: player i's payoff when switching to pure action a, others fixed.
std::vector<std::vector<double>> deviation_payoffs(const Nfpg& g, const NumericGame<double>& table,
                                                   const StrategyProfile& play);

struct Verification {
  bool is_pe = false;
  double residual = 0.0;
};

Verification verify_pe(const Nfpg& g, const StrategyProfile& profile, double tol = kDefaultTolerance);
// Classical tolerance-NE check of a numeric game at a profile.
Verification verify_ne(const Nfpg& g, const NumericGame<double>& table, const StrategyProfile& profile,
                       double tol = kDefaultTolerance);

// Builds a fully populated candidate (payoffs, welfare, support, residual).
EquilibriumCandidate make_candidate(const Nfpg& g, const StrategyProfile& profile);

std::vector<Support> enumerate_supports(const Nfpg& g);
std::uint64_t support_count(const Nfpg& g);

}  // namespace pg::game
