#include <gtest/gtest.h>

#include <random>

#include "pgsolve/game.hpp"
#include "pgsolve/modelio.hpp"
#include "support/oracles.hpp"

using namespace pg;
using game::StrategyProfile;

namespace {

StrategyProfile confidence_profile(double a2, double a3) { return {{{1.0}, {a2, 1 - a2}, {a3, 1 - a3}}}; }

std::size_t joint(const game::Nfpg& g, std::vector<int> a) { return g.joint_index(a); }

}  // namespace

TEST(Nfpg, ShapeAndJointOrder) {
  auto g = modelio::confidence_game();
  EXPECT_EQ(g.num_players(), 3u);
  EXPECT_EQ(g.num_actions(0), 1u);
  EXPECT_EQ(g.actions(0)[0], game::kIdleAction);
  EXPECT_EQ(g.num_joint(), 4u);
  EXPECT_EQ(g.joint_actions(1), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(joint(g, {0, 1, 0}), 2u);
  EXPECT_FALSE(g.is_classical());
  EXPECT_TRUE(modelio::ultimatum_game(0, 0).is_classical());
}

TEST(Nfpg, RejectsBadConstruction) {
  using expr::PolyExpr;
  std::vector<std::vector<PolyExpr>> u(2, std::vector<PolyExpr>(4, PolyExpr(0)));
  EXPECT_THROW(game::Nfpg({"p", "q"}, {{"a", "b"}, {"a", "c"}}, u), game::GameError);
  EXPECT_THROW(game::Nfpg({"p", "q"}, {{"a", "b"}, {"c"}}, u), game::GameError);
  EXPECT_THROW(game::Nfpg({"p", "q"}, {{"a", "b"}, {}}, u), game::GameError);
}

TEST(Instantiate, ConfidenceEntry) {
  auto g = modelio::confidence_game();
  auto t = game::instantiate(g, confidence_profile(1.0 / 3, 0));
  EXPECT_NEAR(t[0][joint(g, {0, 1, 1})], -4.0 / 3, 1e-12);

  game::ExactProfile exact{{{Rational(1)}, {ratio(1, 3), ratio(2, 3)}, {Rational(0), Rational(1)}}};
  auto te = game::instantiate(g, exact);
  EXPECT_EQ(te[0][joint(g, {0, 1, 1})], ratio(-4, 3));
  const auto x = oracle::assignment(g, confidence_profile(1.0 / 3, 0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < g.num_joint(); ++j) EXPECT_NEAR(t[i][j], oracle::naive_eval(g.utility(i, j), x), 1e-12);
}

TEST(Instantiate, UltimatumMaterialPayoffs) {
  auto g = modelio::ultimatum_game(0, 0);
  auto t = game::instantiate(g, StrategyProfile{{{0.3, 0.7}, {0.6, 0.4}}});
  // (fair, accept), (fair, reject), (greedy, accept), (greedy, reject)
  EXPECT_EQ(t[0], (std::vector<double>{5, 5, 9, 0}));
  EXPECT_EQ(t[1], (std::vector<double>{5, 5, 1, 0}));
}

TEST(Instantiate, ConstantGameIgnoresProfile) {
  std::mt19937_64 rng(1);
  auto g = oracle::random_dominant_2x2(rng, 0, 1);
  auto t1 = game::instantiate(g, StrategyProfile{{{1, 0}, {0, 1}}});
  auto t2 = game::instantiate(g, StrategyProfile{{{0.2, 0.8}, {0.5, 0.5}}});
  EXPECT_EQ(t1, t2);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(t1[0][j], g.utility(0, j).constant_term().get_d());
}

TEST(ExpectedUtility, CrossingMixed) {
  auto g = modelio::crossing_game(2);
  StrategyProfile p{{{0.75, 0.25}, {0.5, 0.5}}};
  auto u = game::expected_utility(g, p, p);
  EXPECT_NEAR(u[0], 1.0, 1e-12);
  EXPECT_NEAR(u[1], 0.5, 1e-12);
  auto o = oracle::payoffs(g, p, p);
  EXPECT_NEAR(u[0], o[0], 1e-12);
  EXPECT_NEAR(u[1], o[1], 1e-12);
}

TEST(ExpectedUtility, ConfidenceMixed) {
  auto g = modelio::confidence_game();
  auto p = confidence_profile(1.0 / 3, 0);
  auto u = game::expected_utility(g, p, p);
  EXPECT_NEAR(u[0], -8.0 / 9, 1e-12);
  EXPECT_NEAR(u[1], 0.5, 1e-12);
  EXPECT_NEAR(u[2], 0.5, 1e-12);

  game::ExactProfile exact{{{Rational(1)}, {ratio(1, 3), ratio(2, 3)}, {Rational(0), Rational(1)}}};
  auto ue = game::expected_utility(g, exact, exact);
  EXPECT_EQ(ue[0], ratio(-8, 9));
  EXPECT_EQ(ue[1], ratio(1, 2));
}

TEST(ExpectedUtility, PureProfileIsEntry) {
  auto g = modelio::crossing_game(1);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      auto p = game::pure_profile(g, {a, b});
      auto t = game::instantiate(g, p);
      auto u = game::expected_utility(g, p, p);
      for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(u[i], t[i][joint(g, {a, b})]);
    }
}

TEST(ExpectedUtility, RandomAgreesWithSummation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int t = 0; t < 100; ++t) {
    auto g = oracle::random_linear_2x2(rng);
    double p = u01(rng), q = u01(rng), r = u01(rng), s = u01(rng);
    StrategyProfile belief{{{p, 1 - p}, {q, 1 - q}}}, play{{{r, 1 - r}, {s, 1 - s}}};
    auto u = game::expected_utility(g, belief, play);
    auto o = oracle::payoffs(g, belief, play);
    EXPECT_NEAR(u[0], o[0], 1e-9);
    EXPECT_NEAR(u[1], o[1], 1e-9);
  }
}

TEST(Verify, ConfidenceExamples) {
  auto g = modelio::confidence_game();
  EXPECT_TRUE(game::verify_pe(g, confidence_profile(1, 0)).is_pe);
  auto half = confidence_profile(0.5, 0);
  auto v = game::verify_pe(g, half);
  EXPECT_FALSE(v.is_pe);
  // a2 = 1/2 leaves player 2 strictly preferring a2: 3/4 against a mix worth 5/8.
  EXPECT_NEAR(oracle::max_gain(g, half), 0.125, 1e-12);
  EXPECT_NEAR(v.residual, 0.125, 1e-12);
}

TEST(Verify, ResidualBoundsDeviationGain) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int t = 0; t < 100; ++t) {
    auto g = oracle::random_linear_2x2(rng);
    double p = u01(rng), q = u01(rng);
    StrategyProfile prof{{{p, 1 - p}, {q, 1 - q}}};
    EXPECT_GE(game::verify_pe(g, prof).residual + 1e-12, oracle::max_gain(g, prof));
  }
}

TEST(Verify, RejectsBadShapeAndTolerance) {
  auto g = modelio::crossing_game(1);
  EXPECT_THROW(game::verify_pe(g, StrategyProfile{{{1.0, 0.0}}}), game::ProfileShapeMismatch);
  EXPECT_THROW(game::verify_pe(g, StrategyProfile{{{1.0, 0.0}, {1.0}}}), game::ProfileShapeMismatch);
  EXPECT_THROW(game::verify_pe(g, game::pure_profile(g, {0, 0}), 0.0), std::invalid_argument);
}

TEST(Supports, Enumeration) {
  using expr::PolyExpr;
  std::vector<std::vector<PolyExpr>> u(3, std::vector<PolyExpr>(8, PolyExpr(0)));
  game::Nfpg g({"p", "q", "r"}, {{"a", "b"}, {"c", "d"}, {"e", "f"}}, u);
  auto s = game::enumerate_supports(g);
  EXPECT_EQ(s.size(), 27u);
  EXPECT_EQ(game::support_count(g), 27u);
  EXPECT_EQ(s.front().masks, (std::vector<std::uint32_t>{1, 1, 1}));
  EXPECT_EQ(s[1].masks, (std::vector<std::uint32_t>{1, 1, 2}));
  EXPECT_EQ(s.back().masks, (std::vector<std::uint32_t>{3, 3, 3}));
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(game::enumerate_supports(modelio::confidence_game()).size(), 9u);
}

TEST(Supports, RenderAndDerive) {
  auto g = modelio::confidence_game();
  auto s = game::support_of(confidence_profile(1.0 / 3, 0));
  EXPECT_EQ(game::to_string(g, s), "{idle} x {a2,r2} x {r3}");
  EXPECT_EQ(s, oracle::support(confidence_profile(1.0 / 3, 0)));
}

TEST(Profiles, FromNames) {
  auto g = modelio::crossing_game(1);
  auto p = game::profile_from_names(g, {{"r", 0.75}, {"c", 0.5}});
  EXPECT_DOUBLE_EQ(p.probs[0][1], 0.25);
  EXPECT_DOUBLE_EQ(p.probs[1][0], 0.5);
  EXPECT_TRUE(game::is_distribution(p));
  EXPECT_FALSE(game::is_distribution(StrategyProfile{{{0.5, 0.4}, {1, 0}}}));
}

TEST(Candidate, FieldsAgree) {
  auto g = modelio::confidence_game();
  auto c = game::make_candidate(g, confidence_profile(1.0 / 3, 0));
  EXPECT_NEAR(c.welfare, c.payoffs[0] + c.payoffs[1] + c.payoffs[2], 1e-12);
  EXPECT_LE(c.residual, 1e-12);
  EXPECT_EQ(c.support.masks, (std::vector<std::uint32_t>{1, 3, 2}));
}
