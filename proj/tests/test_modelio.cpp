#include <gtest/gtest.h>

#include <sstream>

#include "pgsolve/modelio.hpp"
#include "pgsolve/nlp.hpp"
#include "pgsolve/pcsg.hpp"
#include "support/oracles.hpp"

using namespace pg;
using modelio::ErrorKind;
using expr::PolyExpr;

namespace {

ErrorKind kind_of(const std::string& text, const modelio::Bindings& b = {}) {
  try {
    auto m = modelio::elaborate(modelio::parse_model(text), b);
    // State-dependent checks run as states are expanded.
    if (auto* g = std::get_if<pcsg::Pcsg>(&m)) pcsg::explore(*g, 4);
  } catch (const modelio::ModelError& e) {
    return e.kind();
  } catch (const pcsg::ModelError&) {
    return ErrorKind::InvalidModel;
  }
  ADD_FAILURE() << "accepted:\n" << text;
  return ErrorKind::InvalidModel;
}

const char* kTwoByTwo = R"(nfpg
player p: a, b;
player q: c, d;
)";

PolyExpr var(int player, const char* a) { return PolyExpr::variable({player, a}); }

game::Nfpg nfpg_of(const modelio::BuiltinModel& m, const modelio::Bindings& b) {
  return std::get<game::Nfpg>(m.construct(modelio::resolve_params(m, b)));
}

}  // namespace

TEST(Parser, UltimatumRewardBlocks) {
  auto ast = modelio::parse_model(modelio::find_builtin("ultimatum")->source);
  EXPECT_EQ(ast.kind, modelio::ModelKind::Nfpg);
  ASSERT_EQ(ast.rewards.size(), 2u);
  EXPECT_EQ(ast.rewards[0].player, "p1");
  EXPECT_EQ(ast.rewards[1].items.size(), 4u);
  std::set<std::string> idents;
  auto walk = [&](auto&& self, const modelio::Expr& e) -> void {
    if (e.op == modelio::Expr::Op::Ident) idents.insert(e.name);
    for (const auto& a : e.args) self(self, a);
  };
  for (const auto& blk : ast.rewards)
    for (const auto& it : blk.items) walk(walk, it.value);
  EXPECT_TRUE(idents.contains("reject"));
  EXPECT_TRUE(idents.contains("theta1"));
}

TEST(Parser, SaturatingUpdateDistribution) {
  const std::string text = R"(pcsg
const gamma;
player vehicle: r, m;
player pedestrian: w, c;
cr : [0..10] init 0;
[w,r] true -> gamma*gamma : (cr'=min(cr+1,10)) + gamma*(1-gamma) : (cr'=min(cr+2,10))
    + (1-gamma)*gamma : (cr'=min(cr+3,10)) + (1-gamma)*(1-gamma) : (cr'=cr);
[r,c] true -> (cr'=cr);
[m,w] true -> (cr'=cr);
[m,c] true -> (cr'=cr);
)";
  auto ast = modelio::parse_model(text);
  ASSERT_EQ(ast.commands.size(), 4u);
  EXPECT_EQ(ast.commands[0].branches.size(), 4u);
  EXPECT_EQ(ast.commands[0].branches[0].updates[0].value.op, modelio::Expr::Op::Min);
  const Rational g = ratio(1, 3);
  auto game = modelio::elaborate_pcsg(ast, {{"gamma", g}});
  auto info = game.expand(pcsg::State{9});
  const auto& tr = info.transitions[0];  // (r, w)
  std::map<pcsg::State, Rational> dist;
  for (const auto& [s, p] : tr) dist[s] += p;
  // Two branches saturate at 10 and merge.
  EXPECT_EQ(dist.at(pcsg::State{10}), Rational(g * g + g * (1 - g) + (1 - g) * g));
  EXPECT_EQ(dist.at(pcsg::State{9}), Rational((1 - g) * (1 - g)));
}

TEST(Parser, PrintRoundTripBuiltins) {
  for (const auto& m : modelio::builtin_models()) {
    auto ast = modelio::parse_model(m.source);
    auto text = modelio::print_model(ast);
    EXPECT_EQ(modelio::parse_model(text), ast) << m.name << "\n" << text;
    EXPECT_EQ(modelio::print_model(modelio::parse_model(text)), text) << m.name;
  }
}

TEST(Parser, ExpressionPrinting) {
  auto ast = modelio::parse_model("nfpg\nconst k = 2 - (3 - 1);\nconst j = -(2^3)*4/5;\nplayer p: a;\n");
  EXPECT_EQ(modelio::print_expr(*ast.constants[0].value), "2 - (3 - 1)");
  auto again = modelio::parse_model(modelio::print_model(ast));
  EXPECT_EQ(again, ast);
}

TEST(Parser, Errors) {
  EXPECT_EQ(kind_of("nfpg\nplayer p: a, b\n"), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of("game\nplayer p: a;\n"), ErrorKind::SyntaxError);
  EXPECT_EQ(kind_of(std::string(kTwoByTwo) + "rewards \"p\"\n  [a] true : zz;\nendrewards\n"),
            ErrorKind::UnknownIdentifier);
  EXPECT_EQ(kind_of("nfpg\nplayer p: a, a;\nplayer q: c;\n"), ErrorKind::DuplicateAction);
  EXPECT_EQ(kind_of("nfpg\nplayer p: a;\nplayer q: a;\n"), ErrorKind::DuplicateAction);
  EXPECT_EQ(kind_of("nfpg\nplayer p: idle, b;\nplayer q: c;\n"), ErrorKind::DuplicateAction);
  EXPECT_EQ(kind_of("nfpg\nplayer p: a;\nplayer p: b;\n"), ErrorKind::DuplicateOrMissingPlayers);
  EXPECT_EQ(kind_of("nfpg\nconst x = 1;\n"), ErrorKind::DuplicateOrMissingPlayers);
  EXPECT_EQ(kind_of(std::string(kTwoByTwo) + "rewards \"z\"\n  [a] true : 1;\nendrewards\n"),
            ErrorKind::UnknownIdentifier);
  EXPECT_EQ(kind_of("nfpg\nconst t;\nplayer p: a, b;\n"), ErrorKind::UnboundConstant);
  EXPECT_EQ(kind_of(std::string(kTwoByTwo) + "rewards \"p\"\n  [a] true : 1/c;\nendrewards\n"),
            ErrorKind::NonPolynomialAfterSubstitution);
  EXPECT_EQ(kind_of("pcsg\nplayer p: a;\nx : [0..2] init 3;\n[a] true -> (x'=x);\n"), ErrorKind::RangeError);
  EXPECT_EQ(kind_of("pcsg\nplayer p: a;\nx : [0..2] init 0;\n[a] true -> (x'=x+1);\n"), ErrorKind::RangeError);
  EXPECT_EQ(kind_of("pcsg\nplayer p: a;\nx : [0..2] init 0;\n[a] true -> 1/2 : (x'=1) + 1/3 : (x'=0);\n"),
            ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of("pcsg\nplayer p: a, b;\nx : [0..2] init 0;\n[a] true -> (x'=x);\n[a] x < 2 -> (x'=x);\n"
                    "[b] true -> (x'=x);\n"),
            ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of("nfpg\nconst t;\nplayer p: a, b;\n", {{"s", 1}}), ErrorKind::UnknownIdentifier);
}

TEST(Parser, ErrorPositions) {
  try {
    modelio::parse_model("nfpg\nplayer p: a, b;\nplayer q c;\n");
    FAIL();
  } catch (const modelio::ModelError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SyntaxError);
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.col(), 10);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Parser, UnboundConstants) {
  auto ast = modelio::parse_model(modelio::find_builtin("crossing_multi")->source);
  EXPECT_EQ(modelio::unbound_constants(ast), (std::vector<std::string>{"mu", "gamma", "k"}));
}

TEST(Elaborate, UltimatumZeroIsMaterial) {
  auto g = nfpg_of(*modelio::find_builtin("ultimatum"), {{"theta1", 0}, {"theta2", 0}});
  EXPECT_TRUE(g.is_classical());
  const std::vector<std::vector<int>> want{{5, 5, 9, 0}, {5, 5, 1, 0}};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g.utility(i, j), PolyExpr(want[i][j]));
}

TEST(Elaborate, CrossingMatrices) {
  auto ast = modelio::parse_model(modelio::find_builtin("crossing")->source);
  auto g = modelio::elaborate_nfpg(ast, {{"mu", 1}});
  const PolyExpr r = var(0, "r"), m = var(0, "m"), w = var(1, "w"), c = var(1, "c");
  // (r,w), (r,c), (m,w), (m,c)
  EXPECT_EQ(g.utility(0, 0), PolyExpr(1) - w);
  EXPECT_EQ(g.utility(0, 1), PolyExpr(1) + c);
  EXPECT_EQ(g.utility(0, 2), PolyExpr(1) + w);
  EXPECT_EQ(g.utility(0, 3), PolyExpr(1) - c);
  EXPECT_EQ(g.utility(1, 0), PolyExpr(1) - r);
  EXPECT_EQ(g.utility(1, 1), PolyExpr(1) + r - c);
  EXPECT_EQ(g.utility(1, 2), PolyExpr(1) + m);
  EXPECT_EQ(g.utility(1, 3), PolyExpr(1) - m - c);

  auto g0 = modelio::elaborate_nfpg(ast, {{"mu", 0}});
  for (std::size_t j = 0; j < 4; ++j) EXPECT_FALSE(g0.utility(1, j).variables().contains({1, "c"}));
}

TEST(Elaborate, ZeroConstantRemovesTerm) {
  auto ast = modelio::parse_model(
      "nfpg\nconst t;\nplayer p: a, b;\nplayer q: c, d;\nrewards \"p\"\n  [a,c] true : 2 + t*c*d;\nendrewards\n");
  auto g = modelio::elaborate_nfpg(ast, {{"t", 0}});
  EXPECT_EQ(g.utility(0, 0).terms().size(), 1u);
  EXPECT_EQ(g.utility(0, 0), PolyExpr(2));
}

TEST(Catalog, DslAndConstructorsAgree) {
  for (const auto& m : modelio::builtin_models()) {
    if (m.kind != modelio::ModelKind::Nfpg) continue;
    auto ast = modelio::parse_model(m.source);
    auto b = modelio::resolve_params(m, {});
    EXPECT_EQ(modelio::elaborate_nfpg(ast, b), std::get<game::Nfpg>(m.construct(b))) << m.name;
    for (auto& p : m.params) {
      auto alt = b;
      alt[p.name] = p.lo;
      EXPECT_EQ(modelio::elaborate_nfpg(ast, alt), std::get<game::Nfpg>(m.construct(alt))) << m.name << " " << p.name;
    }
  }
}

TEST(Catalog, MultiStageDslAndConstructorAgree) {
  const auto* m = modelio::find_builtin("crossing_multi");
  auto ast = modelio::parse_model(m->source);
  for (const Rational& gamma : {Rational(0), ratio(2, 5), Rational(1)}) {
    modelio::Bindings b{{"mu", 2}, {"gamma", gamma}, {"k", 3}};
    auto dsl = modelio::elaborate_pcsg(ast, b);
    auto direct = std::get<pcsg::Pcsg>(m->construct(b));
    auto sp = pcsg::explore(direct, 3);
    for (const auto& s : sp.states) {
      auto x = dsl.expand(s), y = direct.expand(s);
      EXPECT_EQ(x.actions, y.actions);
      EXPECT_EQ(x.action_rewards, y.action_rewards);
      EXPECT_EQ(x.state_rewards, y.state_rewards);
      ASSERT_EQ(x.transitions.size(), y.transitions.size());
      for (std::size_t j = 0; j < x.transitions.size(); ++j) {
        std::map<pcsg::State, Rational> dx, dy;
        for (const auto& [t, p] : x.transitions[j]) dx[t] += p;
        for (const auto& [t, p] : y.transitions[j]) dy[t] += p;
        EXPECT_EQ(dx, dy);
      }
    }
  }
}

TEST(Catalog, Shapes) {
  auto c = modelio::confidence_game();
  EXPECT_EQ(c.num_players(), 3u);
  EXPECT_EQ(c.num_actions(0), 1u);
  EXPECT_EQ(c.num_actions(1), 2u);
  EXPECT_EQ(c.num_actions(2), 2u);
  // M1 of the confidence game in joint order (idle, a2|r2, a3|r3).
  const PolyExpr a2 = var(1, "a2"), a3 = var(2, "a3");
  EXPECT_EQ(c.utility(0, 0), PolyExpr(1) + a2 + a3);
  EXPECT_EQ(c.utility(0, 3), PolyExpr(-4) * (a2 + a3));
  EXPECT_EQ(c.utility(1, 0), PolyExpr(ratio(3, 2)) * (a2 + a3));

  auto cv = modelio::cyclist_vehicle_game();
  // Vehicle payoff at (autonomous, wait, stop).
  EXPECT_EQ(cv.utility(2, cv.joint_index({0, 1, 1})), PolyExpr(15));
}

TEST(Catalog, Params) {
  const auto* m = modelio::find_builtin("crossing_multi");
  EXPECT_THROW(modelio::resolve_params(*m, {{"k", ratio(5, 2)}}), modelio::ModelError);
  EXPECT_THROW(modelio::resolve_params(*m, {{"gamma", 2}}), modelio::ModelError);
  EXPECT_THROW(modelio::resolve_params(*m, {{"nope", 2}}), modelio::ModelError);
  auto b = modelio::resolve_params(*m, {{"gamma", 0}});
  EXPECT_EQ(b.at("k"), Rational(5));
  EXPECT_EQ(modelio::find_builtin("nope"), nullptr);
}

// ---------------------------------------------------------------- results

namespace {

modelio::ResultRecord confidence_record() {
  auto g = modelio::confidence_game();
  auto r = nlp::find_swpe(g, {});
  modelio::ResultRecord rec;
  rec.model = "confidence";
  rec.players = g.players();
  for (const auto& c : r.all) rec.rows.push_back(modelio::make_row(g, c));
  return rec;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Results, CsvShape) {
  auto rec = confidence_record();
  auto text = modelio::render_results({rec}, modelio::Format::Csv, 3);
  auto ls = lines(text);
  ASSERT_GE(ls.size(), 2u);
  EXPECT_EQ(ls[0], "# seed=3");
  EXPECT_EQ(ls[1], "model,eq_index,player,action,prob,utility,welfare,residual");
  EXPECT_EQ(ls.size(), 2 + rec.rows.size() * 8);
  int prob_rows = 0, util_rows = 0;
  for (std::size_t k = 2; k < 10; ++k) {
    auto f = ls[k];
    if (f.find(",,,") != std::string::npos)
      ++util_rows;
    else
      ++prob_rows;
  }
  EXPECT_EQ(prob_rows, 5);
  EXPECT_EQ(util_rows, 3);
}

TEST(Results, WelfareIsPayoffSum) {
  auto rec = confidence_record();
  for (const auto& r : rec.rows) {
    double s = 0.0;
    for (double u : r.utilities) s += u;
    EXPECT_NEAR(r.welfare, s, 1e-9);
  }
}

TEST(Results, JsonRoundTrip) {
  auto rec = confidence_record();
  rec.params = {{"theta", "0.5"}};
  modelio::ResultRecord failed;
  failed.model = "x";
  failed.players = {"a"};
  failed.status = "no equilibrium found";
  auto text = modelio::render_results({rec, failed}, modelio::Format::Json, 0);
  auto back = modelio::read_results_json(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], rec);
  EXPECT_EQ(back[1], failed);
  EXPECT_THROW(modelio::read_results_json("{\"records\": 3"), modelio::IoError);
}

TEST(Results, FailedRowsAndQuoting) {
  modelio::ResultRecord failed;
  failed.model = "odd,name";
  failed.params = {{"mu", "1"}};
  failed.status = "stage \"x\" failed";
  auto ls = lines(modelio::render_results({failed}, modelio::Format::Csv, 0));
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[1], "model,param:mu,eq_index,player,action,prob,utility,welfare,residual");
  EXPECT_EQ(ls[2], "\"odd,name\",1,failed,,\"stage \"\"x\"\" failed\",,,,");
}

TEST(Results, NumberFormat) {
  EXPECT_EQ(modelio::format_number(0.0), "0");
  EXPECT_EQ(modelio::format_number(-0.0), "0");
  EXPECT_EQ(modelio::format_number(0.45), "0.45");
  EXPECT_EQ(modelio::format_number(1.0 / 3), "0.333333333333");
  EXPECT_EQ(modelio::format_number(14), "14");
}
