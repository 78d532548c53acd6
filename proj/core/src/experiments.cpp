#include <cmath>

#include "pcsg_internal.hpp"
#include "pgsolve/pcsg.hpp"

namespace pg::pcsg {

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  double m = mean(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

// Visit-weighted probability of each action, per step class and overall.
std::map<std::pair<std::string, std::string>, double> action_probabilities(const ValueTable& vt) {
  auto visits = visit_distribution(vt);
  std::map<std::pair<std::string, std::string>, double> num, den;
  for (int j = 0; j < vt.horizon; ++j) {
    const int t = vt.horizon - j;
    const std::string step = "step" + std::to_string(j);
    for (const auto& [id, w] : visits[static_cast<std::size_t>(j)]) {
      if (w == 0.0) continue;
      const auto& info = vt.space.info[static_cast<std::size_t>(id)];
      const auto& sigma = vt.strategies[static_cast<std::size_t>(t)].at(id).profile;
      for (std::size_t i = 0; i < info.actions.size(); ++i)
        for (std::size_t a = 0; a < info.actions[i].size(); ++a) {
          const auto& name = info.actions[i][a];
          if (name == game::kIdleAction) continue;
          for (const auto& cls : {std::string("all"), step}) {
            num[{cls, name}] += w * sigma.probs[i][a];
            den[{cls, name}] += w;
          }
        }
    }
  }
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [key, d] : den) out[key] = d > 0 ? num[key] / d : 0.0;
  return out;
}

}  // namespace

ExperimentReport run_experiments(const Pcsg& g, int k, int runs, const nlp::SolverConfig& cfg, std::uint64_t seed) {
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (k < 1) throw std::invalid_argument("horizon must be at least 1");
  ExperimentReport rep;
  rep.runs = runs;
  rep.horizon = k;
  rep.players = g.players();
  const StateSpace space = explore(g, k);
  detail::StageCache cache;
  std::vector<std::map<std::pair<std::string, std::string>, double>> probs;
  for (int r = 0; r < runs; ++r) {
    auto vt = detail::backward_induction(g, space, k, cfg, Selection::random_uniform(seed + static_cast<std::uint64_t>(r)),
                                         &cache);
    rep.run_utilities.push_back(vt.initial_values());
    probs.push_back(action_probabilities(vt));
  }
  for (std::size_t i = 0; i < rep.players.size(); ++i) {
    std::vector<double> col;
    for (const auto& u : rep.run_utilities) col.push_back(u[i]);
    rep.utility_mean.push_back(mean(col));
    rep.utility_stddev.push_back(stddev(col));
  }
  for (const auto& p : probs)
    for (const auto& [key, v] : p) rep.action_prob_runs[key];
  for (auto& [key, vals] : rep.action_prob_runs) {
    for (const auto& p : probs) {
      auto it = p.find(key);
      vals.push_back(it == p.end() ? 0.0 : it->second);
    }
    rep.action_prob_mean[key] = mean(vals);
  }
  return rep;
}

}  // namespace pg::pcsg
