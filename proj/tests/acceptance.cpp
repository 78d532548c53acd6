// End-to-end checks on the bundled case studies. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "pgsolve/modelio.hpp"
#include "pgsolve/nlp.hpp"
#include "pgsolve/pcsg.hpp"
#include "support/oracles.hpp"
#include "support/pcsg_oracles.hpp"

using namespace pg;
using game::EquilibriumCandidate;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream why;

  void require(bool cond, const std::string& msg) {
    if (!cond) {
      if (!ok) why << "; ";
      why << msg;
      ok = false;
    }
  }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

double prob_of(const game::Nfpg& g, const game::StrategyProfile& p, std::size_t player, const std::string& action) {
  const auto& acts = g.actions(player);
  for (std::size_t a = 0; a < acts.size(); ++a)
    if (acts[a] == action) return p.probs[player][a];
  throw std::logic_error("no action " + action);
}

game::Support pure(const game::Nfpg& g, const std::vector<std::string>& actions) {
  game::Support s;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& acts = g.actions(i);
    const auto it = std::find(acts.begin(), acts.end(), actions[i]);
    s.masks.push_back(1u << static_cast<unsigned>(it - acts.begin()));
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void within(Check& c, double secs, double limit) {
  c.require(secs < limit, "took " + std::to_string(secs) + " s, limit " + std::to_string(limit) + " s");
}

void confidence(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = modelio::confidence_game();
  const auto r = nlp::find_swpe(g, {});
  c.require(r.all.size() == 3 && oracle::supports(r.all).size() == 3,
            "expected 3 supports, got " + std::to_string(r.all.size()));
  const std::vector<std::vector<double>> want{{-8.0 / 9, 0.5, 0.5}, {-1, 1.5, 0.5}, {0, 0.5, 0.5}};
  for (const auto& w : want) {
    bool hit = false;
    for (const auto& e : r.all)
      hit = hit || (near(e.payoffs[0], w[0], 1e-6) && near(e.payoffs[1], w[1], 1e-6) && near(e.payoffs[2], w[2], 1e-6));
    c.require(hit, "missing payoff vector (" + std::to_string(w[0]) + "," + std::to_string(w[1]) + "," +
                       std::to_string(w[2]) + ")");
  }
  c.require(near(r.best.welfare, 1, 1e-6), "best welfare " + std::to_string(r.best.welfare));
  within(c, seconds_since(t0), 5);
}

void example2(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = modelio::example2_game();
  const auto r = nlp::find_swpe(g, {});
  const double a2 = prob_of(g, r.best.profile, 1, "a2");
  c.require(near(a2, 0.45, 1e-4), "p(a2) = " + std::to_string(a2));
  c.require(near(r.best.welfare, 1, 1e-6), "welfare " + std::to_string(r.best.welfare));
  within(c, seconds_since(t0), 2);
}

void ultimatum(Check& c) {
  auto point = [&](const game::Nfpg& g, const char* label, double u) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = nlp::find_swpe(g, {});
    c.require(r.best.support == pure(g, {"fair", "accept"}), std::string(label) + ": best is not (fair, accept)");
    c.require(near(r.best.payoffs[0], u, 1e-6) && near(r.best.payoffs[1], u, 1e-6),
              std::string(label) + ": payoffs " + std::to_string(r.best.payoffs[0]) + "," +
                  std::to_string(r.best.payoffs[1]));
    within(c, seconds_since(t0), 5);
  };
  point(modelio::ultimatum_game(1, 1), "ultimatum", 14);
  point(modelio::reciprocity_game(1, 1), "reciprocity", 13);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = nlp::find_swpe(modelio::ultimatum_game(0, 0), {});
  c.require(near(r.best.welfare, 10, 1e-6), "material welfare " + std::to_string(r.best.welfare));
  within(c, seconds_since(t0), 5);
}

void crossing(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g5 = modelio::crossing_game(5);
  const auto r5 = nlp::find_swpe(g5, {});
  c.require(r5.all.size() == 1 && r5.all[0].support == pure(g5, {"m", "w"}), "mu=5 is not uniquely (m, w)");

  const auto g2 = modelio::crossing_game(2);
  auto is_mixed = [&](const EquilibriumCandidate& e) {
    return near(prob_of(g2, e.profile, 0, "r"), 0.75, 1e-4) && near(prob_of(g2, e.profile, 0, "m"), 0.25, 1e-4) &&
           near(prob_of(g2, e.profile, 1, "c"), 0.5, 1e-4) && near(prob_of(g2, e.profile, 1, "w"), 0.5, 1e-4);
  };
  const auto r2 = nlp::find_swpe(g2, {});
  c.require(std::any_of(r2.all.begin(), r2.all.end(), is_mixed), "mu=2 lacks the mixed equilibrium");
  const auto scan = nlp::grid_oracle(g2, 400, oracle::grid_tolerance(g2, 400));
  c.require(std::any_of(scan.begin(), scan.end(), is_mixed), "grid scan lacks the mixed equilibrium");
  c.require(oracle::supports(scan) == oracle::supports(r2.all), "grid scan and solver disagree on supports");
  within(c, seconds_since(t0), 10);
}

void cyclist(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = modelio::cyclist_vehicle_game();
  const auto r = nlp::find_swpe(g, {});
  bool go = false, stop = false;
  for (const auto& e : r.all) {
    if (!near(prob_of(g, e.profile, 0, "a"), 14.0 / 17, 1e-4) || !near(prob_of(g, e.profile, 0, "h"), 3.0 / 17, 1e-4))
      continue;
    go = go || near(prob_of(g, e.profile, 2, "g"), 1, 1e-4);
    stop = stop || near(prob_of(g, e.profile, 2, "s"), 0.97, 1e-2);
  }
  c.require(go, "no (14/17, 3/17) equilibrium with go-probability 1");
  c.require(stop, "no (14/17, 3/17) equilibrium with stop-probability near 0.97");

  const auto b = modelio::cyclist_vehicle_bayes_game(ratio(9, 10));
  const auto scan = nlp::grid_oracle(b, 300, oracle::grid_tolerance(b, 300));
  c.require(scan.size() == 1 && scan[0].support == pure(b, {"c", "s"}), "p=0.9 grid scan is not uniquely (c, s)");
  const auto rb = nlp::find_swpe(b, {});
  c.require(rb.all.size() == 1 && rb.best.support == pure(b, {"c", "s"}), "p=0.9 solver is not uniquely (c, s)");
  within(c, seconds_since(t0), 30);
}

void table_stats(Check& c) {
  struct Row {
    int k;
    Rational gamma;
    std::uint64_t states, transitions;
  };
  const Rational mid = ratio(1, 2);
  const std::vector<Row> rows{
      {5, 0, 6, 21},     {5, mid, 91, 701},   {5, 1, 91, 256},   {6, 0, 7, 25},      {6, mid, 140, 1198},
      {6, 1, 140, 413},  {7, 0, 8, 29},       {7, mid, 204, 1889}, {7, 1, 204, 624}, {8, 0, 9, 33},
      {8, mid, 285, 2806}, {8, 1, 285, 897},  {9, 0, 10, 37},    {9, mid, 385, 3981}, {9, 1, 385, 1240},
      {10, 0, 11, 41},   {10, mid, 506, 5446}, {10, 1, 506, 1661}};
  for (const auto& row : rows) {
    const auto st = pcsg::model_stats(modelio::crossing_multi_game(1, row.gamma, row.k), row.k);
    c.require(st.states == row.states && st.transitions == row.transitions,
              "k=" + std::to_string(row.k) + " gamma=" + row.gamma.get_str() + ": got (" + std::to_string(st.states) +
                  ", " + std::to_string(st.transitions) + ")");
  }
  // Any other interior gamma has the same structure.
  const auto st = pcsg::model_stats(modelio::crossing_multi_game(1, ratio(3, 10), 5), 5);
  c.require(st.states == 91 && st.transitions == 701, "gamma=3/10 differs from gamma=1/2");
}

void trends(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 5; k <= 10; ++k) {
    const auto lo = pcsg::run_experiments(modelio::crossing_multi_game(1, 0, k), k, 10, {}, 1);
    const auto hi = pcsg::run_experiments(modelio::crossing_multi_game(1, 1, k), k, 10, {}, 1);
    const double cross0 = lo.action_prob_mean.at({"all", "c"}), cross1 = hi.action_prob_mean.at({"all", "c"});
    std::cerr << "  k=" << k << " crossing " << cross0 << " -> " << cross1 << ", pedestrian utility "
              << lo.utility_mean[1] << " -> " << hi.utility_mean[1] << "\n";
    c.require(cross1 < cross0, "k=" + std::to_string(k) + ": crossing probability does not drop");
    if (k >= 8) c.require(hi.utility_mean[1] > lo.utility_mean[1], "k=" + std::to_string(k) + ": pedestrian utility does not rise");
  }
  within(c, seconds_since(t0), 600);
}

void properties(Check& c) {
  std::mt19937_64 rng(2024);
  int mismatch = 0;
  for (int t = 0; t < 200; ++t) {
    const auto g = oracle::random_linear_2x2(rng);
    const auto found = nlp::find_swpe(g, {});
    if (oracle::supports(found.all) != oracle::supports(nlp::grid_oracle(g, 300, oracle::grid_tolerance(g, 300))))
      ++mismatch;
  }
  c.require(mismatch == 0, "(a) " + std::to_string(mismatch) + " of 200 games disagree with the grid scan");

  int wrong = 0;
  for (int t = 0; t < 200; ++t) {
    const int row = static_cast<int>(rng() % 2), col = static_cast<int>(rng() % 2);
    const auto g = oracle::random_dominant_2x2(rng, row, col);
    const auto r = nlp::find_swpe(g, {});
    if (r.all.size() != 1 || r.best.support != game::Support{{1u << row, 1u << col}}) ++wrong;
  }
  c.require(wrong == 0, "(b) " + std::to_string(wrong) + " of 200 dominant cells missed");

  const std::vector<expr::ProbVar> xs{{0, "x"}, {0, "y"}, {1, "w"}};
  int fd_bad = 0;
  for (int t = 0; t < 300; ++t) {
    const auto e = oracle::random_poly(rng, xs, 4, 10);
    Rational bound = 0;
    for (const auto& [m, coef] : e.terms()) bound += abs(coef);
    bound *= 4;
    const auto pt = oracle::random_point(rng, xs);
    for (const auto& v : xs) {
      const Rational g = expr::eval_expr(expr::grad_expr(e, v), pt);
      for (const Rational& h : {ratio(1, 1000), ratio(1, 10000)}) {
        auto up = pt, dn = pt;
        up[v] += h;
        dn[v] -= h;
        const Rational fd = (expr::eval_expr(e, up) - expr::eval_expr(e, dn)) / (2 * h);
        if (abs(fd - g) > bound * h * h) ++fd_bad;
      }
    }
  }
  c.require(fd_bad == 0, "(c) " + std::to_string(fd_bad) + " finite-difference violations");

  auto induct = [&](const pcsg::Pcsg& g, int k, pcsg::Selection sel, const std::string& label) {
    const auto chk = testing_models::check_induction(g, pcsg::backward_induction(g, k, {}, sel));
    c.require(chk.all_present && chk.stages > 0 && chk.worst_value_gap <= 1e-9 && chk.worst_residual <= 2e-6,
              "(d) " + label);
  };
  induct(testing_models::one_shot_crossing(5), 1, pcsg::Selection::sw_optimal(), "one-shot crossing");
  induct(testing_models::zero_reward_chain(), 4, pcsg::Selection::sw_optimal(), "zero-reward chain");
  for (const Rational& gamma : {Rational(0), ratio(1, 2), Rational(1)})
    for (int k = 1; k <= 5; ++k) {
      const auto g = modelio::crossing_multi_game(1, gamma, k);
      const std::string label = "crossing_multi gamma=" + gamma.get_str() + " k=" + std::to_string(k);
      induct(g, k, pcsg::Selection::sw_optimal(), label);
      induct(g, k, pcsg::Selection::random_uniform(3), label + " random");
    }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"confidence game equilibria", confidence},
      {"belief-dependent partner", example2},
      {"ultimatum and reciprocity", ultimatum},
      {"pedestrian crossing", crossing},
      {"cyclist and vehicle", cyclist},
      {"multi-stage model sizes", table_stats},
      {"multi-stage trends", trends},
      {"property suites", properties},
  };
  int failed = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[n].second(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    char line[64];
    std::snprintf(line, sizeof line, "%.2f s", secs);
    std::cout << "criterion " << n + 1 << " " << (c.ok ? "PASS" : "FAIL") << " " << criteria[n].first << " (" << line
              << ")";
    if (!c.ok) std::cout << ": " << c.why.str();
    std::cout << std::endl;
    failed += c.ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
