#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pgsolve/game.hpp"
#include "pgsolve/pcsg.hpp"
#include "pgsolve/rational.hpp"

namespace pg::modelio {

enum class ModelKind { Nfpg, Pcsg };

// Expression tree shared by constants, guards, updates and rewards.
struct Expr {
  enum class Op {
    Num, Ident, True, False,
    Neg, Not,
    Add, Sub, Mul, Div, Pow,
    Lt, Le, Gt, Ge, Eq, Ne,
    And, Or,
    Min, Max,
  };
  Op op = Op::Num;
  Rational value;
  std::string name;
  std::vector<Expr> args;
  int line = 0;
  int col = 0;

  static Expr num(Rational v);
  static Expr ident(std::string n);
  static Expr boolean(bool b);
  static Expr unary(Op op, Expr a);
  static Expr binary(Op op, Expr a, Expr b);

  // Structural equality; source positions are ignored.
  friend bool operator==(const Expr& a, const Expr& b);
};

struct ConstDecl {
  std::string name;
  std::optional<Expr> value;
  friend bool operator==(const ConstDecl&, const ConstDecl&) = default;
};

struct PlayerDecl {
  std::string name;
  std::vector<std::string> actions;  // empty: idle player
  friend bool operator==(const PlayerDecl&, const PlayerDecl&) = default;
};

struct VarDecl {
  std::string name;
  Expr lo, hi, init;
  friend bool operator==(const VarDecl&, const VarDecl&) = default;
};

struct Assign {
  std::string var;
  Expr value;
  friend bool operator==(const Assign&, const Assign&) = default;
};

struct Branch {
  Expr prob;
  std::vector<Assign> updates;  // empty: stay
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Command {
  std::vector<std::string> label;  // at most one action per player
  Expr guard;
  std::vector<Branch> branches;
  int line = 0;
  friend bool operator==(const Command& a, const Command& b) {
    return a.label == b.label && a.guard == b.guard && a.branches == b.branches;
  }
};

struct RewardItem {
  std::optional<std::vector<std::string>> label;  // absent: state reward
  Expr guard;
  Expr value;
  int line = 0;
  friend bool operator==(const RewardItem& a, const RewardItem& b) {
    return a.label == b.label && a.guard == b.guard && a.value == b.value;
  }
};

struct RewardBlock {
  std::string player;
  std::vector<RewardItem> items;
  friend bool operator==(const RewardBlock&, const RewardBlock&) = default;
};

struct ModelAst {
  ModelKind kind = ModelKind::Nfpg;
  std::vector<ConstDecl> constants;
  std::vector<PlayerDecl> players;
  std::vector<VarDecl> variables;
  std::vector<Command> commands;
  std::vector<RewardBlock> rewards;
  friend bool operator==(const ModelAst&, const ModelAst&) = default;
};

enum class ErrorKind {
  SyntaxError,
  UnknownIdentifier,
  DuplicateAction,
  RangeError,
  DuplicateOrMissingPlayers,
  UnboundConstant,
  NonPolynomialAfterSubstitution,
  InvalidModel,
};

std::string to_string(ErrorKind k);

class ModelError : public std::runtime_error {
 public:
  ModelError(ErrorKind kind, std::string message, int line = 0, int col = 0);
  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  ErrorKind kind_;
  int line_;
  int col_;
};

ModelAst parse_model(std::string_view text);
std::string print_model(const ModelAst& ast);
std::string print_expr(const Expr& e);

using Bindings = std::map<std::string, Rational>;
using Model = std::variant<game::Nfpg, pcsg::Pcsg>;

Model elaborate(const ModelAst& ast, const Bindings& bindings);
game::Nfpg elaborate_nfpg(const ModelAst& ast, const Bindings& bindings);
pcsg::Pcsg elaborate_pcsg(const ModelAst& ast, const Bindings& bindings);

// Names of constants declared without a value.
std::vector<std::string> unbound_constants(const ModelAst& ast);

// ---------------------------------------------------------------- catalog

struct ParamSpec {
  std::string name;
  Rational lo, hi;
  std::optional<Rational> default_value;
  bool integer = false;
};

struct BuiltinModel {
  std::string name;
  std::string description;
  ModelKind kind;
  std::vector<ParamSpec> params;
  std::string source;  // DSL text
  // Direct construction from complete bindings.
  std::function<Model(const Bindings&)> construct;
};

const std::vector<BuiltinModel>& builtin_models();
const BuiltinModel* find_builtin(const std::string& name);
// Parameter defaults merged with overrides; validates documented ranges.
Bindings resolve_params(const BuiltinModel& m, const Bindings& overrides);

// Direct constructors.
game::Nfpg confidence_game();
game::Nfpg example2_game();
game::Nfpg reciprocity_game(const Rational& theta1, const Rational& theta2);
game::Nfpg ultimatum_game(const Rational& theta1, const Rational& theta2);
game::Nfpg crossing_game(const Rational& mu);
game::Nfpg cyclist_vehicle_game();
// Two-player reduction with human-driver share 1 - p.
game::Nfpg cyclist_vehicle_bayes_game(const Rational& p);
pcsg::Pcsg crossing_multi_game(const Rational& mu, const Rational& gamma, int k);

// ---------------------------------------------------------------- results

struct ResultRow {
  std::vector<std::vector<std::string>> support;  // per player action names
  std::vector<std::vector<std::pair<std::string, double>>> probs;
  std::vector<double> utilities;
  double welfare = 0.0;
  double residual = 0.0;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultRecord {
  std::string model;
  std::vector<std::pair<std::string, std::string>> params;  // name, rendered value
  std::vector<std::string> players;
  std::vector<ResultRow> rows;
  std::string status = "ok";  // otherwise the failure reason
  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

enum class Format { Csv, Json };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ResultRow make_row(const game::Nfpg& g, const game::EquilibriumCandidate& c);
std::string format_number(double x);

std::string render_results(const std::vector<ResultRecord>& records, Format f, std::uint64_t seed);
// Writes to a path; "-" or empty writes to stdout.
void write_results(const std::vector<ResultRecord>& records, Format f, const std::string& destination,
                   std::uint64_t seed = 0);
std::vector<ResultRecord> read_results_json(const std::string& text);

std::string render_experiment(const pcsg::ExperimentReport& rep, const std::string& model,
                              const std::vector<std::pair<std::string, std::string>>& params, Format f,
                              std::uint64_t seed);
std::string render_values(const pcsg::ValueTable& vt, const pcsg::Pcsg& g, const std::string& model,
                          const std::vector<std::pair<std::string, std::string>>& params, Format f, std::uint64_t seed);

}  // namespace pg::modelio
