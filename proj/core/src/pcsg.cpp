#include "pgsolve/pcsg.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <thread>

#include "pcsg_internal.hpp"
#include "solver_internal.hpp"

namespace pg::pcsg {

std::string to_string(const State& s, const std::vector<std::string>& names) {
  std::string out = "(";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    if (k < names.size()) out += names[k] + "=";
    out += std::to_string(s[k]);
  }
  return out + ")";
}

Pcsg::Pcsg(std::shared_ptr<const Dynamics> dyn)
    : dyn_(std::move(dyn)), players_(dyn_->players()), variables_(dyn_->variables()) {
  if (players_.empty()) throw ModelError("model has no players");
}

StateInfo Pcsg::expand(const State& s) const {
  StateInfo info = dyn_->expand(s);
  const std::size_t n = players_.size();
  if (info.actions.size() != n) throw ModelError("state " + to_string(s, variables_) + ": wrong number of players");
  std::size_t joints = 1;
  for (auto& a : info.actions) {
    if (a.empty()) a.push_back(game::kIdleAction);
    joints *= a.size();
  }
  if (info.transitions.size() != joints)
    throw ModelError("state " + to_string(s, variables_) + ": transition table does not cover every joint action");
  for (auto& dist : info.transitions) {
    std::map<State, Rational> merged;
    for (const auto& [t, p] : dist) {
      if (p < 0) throw ModelError("negative transition probability in state " + to_string(s, variables_));
      merged[t] += p;
    }
    Rational total = 0;
    dist.clear();
    for (auto& [t, p] : merged) {
      total += p;
      if (p != 0) dist.emplace_back(t, p);
    }
    if (total != 1)
      throw ModelError("transition probabilities in state " + to_string(s, variables_) + " sum to " +
                       total.get_str());
  }
  if (info.action_rewards.empty()) info.action_rewards.assign(n, std::vector<expr::PolyExpr>(joints));
  if (info.state_rewards.empty()) info.state_rewards.assign(n, Rational(0));
  if (info.action_rewards.size() != n || info.state_rewards.size() != n)
    throw ModelError("state " + to_string(s, variables_) + ": reward tables do not match players");
  for (const auto& row : info.action_rewards) {
    if (row.size() != joints) throw ModelError("state " + to_string(s, variables_) + ": reward table shape");
    for (const auto& e : row)
      for (const auto& v : e.variables()) {
        const auto& acts = info.actions.at(static_cast<std::size_t>(v.player));
        if (std::find(acts.begin(), acts.end(), v.action) == acts.end())
          throw ModelError("reward in state " + to_string(s, variables_) + " refers to unavailable action '" +
                           v.action + "'");
      }
  }
  return info;
}

StateSpace explore(const Pcsg& g, int k) {
  if (k < 0) throw std::invalid_argument("step bound must be nonnegative");
  StateSpace sp;
  sp.bound = k;
  std::deque<int> queue;
  auto add = [&](const State& s, int d) {
    auto [it, fresh] = sp.index.try_emplace(s, static_cast<int>(sp.states.size()));
    if (fresh) {
      sp.states.push_back(s);
      sp.depth.push_back(d);
      queue.push_back(it->second);
    }
    return it->second;
  };
  add(g.initial(), 0);
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    auto info = g.expand(sp.states[static_cast<std::size_t>(id)]);
    if (sp.depth[static_cast<std::size_t>(id)] < k)
      for (const auto& dist : info.transitions)
        for (const auto& [t, p] : dist) add(t, sp.depth[static_cast<std::size_t>(id)] + 1);
    sp.info.resize(sp.states.size());
    sp.info[static_cast<std::size_t>(id)] = std::move(info);
  }
  sp.successors.resize(sp.states.size());
  for (std::size_t id = 0; id < sp.states.size(); ++id) {
    auto& succ = sp.successors[id];
    for (const auto& dist : sp.info[id].transitions) {
      auto& row = succ.emplace_back();
      for (const auto& [t, p] : dist) {
        auto it = sp.index.find(t);
        row.emplace_back(it == sp.index.end() ? -1 : it->second, p.get_d());
      }
    }
  }
  return sp;
}

ModelStats model_stats(const StateSpace& sp) {
  ModelStats st;
  st.states = sp.states.size();
  for (const auto& succ : sp.successors)
    for (const auto& row : succ)
      for (const auto& [t, p] : row)
        if (t >= 0) ++st.transitions;
  return st;
}

ModelStats model_stats(const Pcsg& g, int k) { return model_stats(explore(g, k)); }

MissingContinuation::MissingContinuation(const std::string& state)
    : std::runtime_error("no continuation value for successor " + state) {}

StageFailure::StageFailure(int t, std::string state, int inconclusive)
    : std::runtime_error("no equilibrium at " + state + " with " + std::to_string(t) + " steps remaining (" +
                         std::to_string(inconclusive) + " inconclusive supports)"),
      t_(t),
      state_(std::move(state)),
      inconclusive_(inconclusive) {}

namespace detail {

game::Nfpg stage_game(const std::vector<std::string>& players, const StateInfo& info,
                      const std::function<const std::vector<double>*(std::size_t joint, std::size_t succ)>& cont) {
  const std::size_t n = players.size();
  std::vector<std::vector<expr::PolyExpr>> util(n);
  for (std::size_t i = 0; i < n; ++i) {
    util[i].reserve(info.transitions.size());
    for (std::size_t j = 0; j < info.transitions.size(); ++j) {
      Rational c = info.state_rewards[i];
      const auto& dist = info.transitions[j];
      double future = 0.0;
      for (std::size_t q = 0; q < dist.size(); ++q) future += dist[q].second.get_d() * (*cont(j, q))[i];
      c += from_double(future);
      util[i].push_back(info.action_rewards[i][j] + expr::PolyExpr(c));
    }
  }
  return game::Nfpg(players, info.actions, std::move(util));
}

}  // namespace detail

game::Nfpg build_stage_game(const Pcsg& g, const StateInfo& info, const State& s, const Continuation& cont) {
  (void)s;
  return detail::stage_game(g.players(), info, [&](std::size_t j, std::size_t q) {
    const auto& t = info.transitions[j][q].first;
    auto it = cont.find(t);
    if (it == cont.end()) throw MissingContinuation(to_string(t, g.variables()));
    return &it->second;
  });
}

game::Nfpg build_stage_game(const Pcsg& g, const State& s, const Continuation& cont) {
  return build_stage_game(g, g.expand(s), s, cont);
}

Continuation ValueTable::continuation(int t) const {
  Continuation c;
  for (const auto& [id, v] : values.at(static_cast<std::size_t>(t))) c[space.states[static_cast<std::size_t>(id)]] = v;
  return c;
}

namespace detail {

std::uint64_t stage_seed(std::uint64_t base, int t, int s) {
  using nlp::detail::splitmix64;
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(t) * 0x100000001b3ULL + static_cast<std::uint64_t>(s)));
}

ValueTable backward_induction(const Pcsg& g, StateSpace space, int k, const nlp::SolverConfig& cfg,
                              Selection select, StageCache* cache) {
  cfg.validate();
  ValueTable vt;
  vt.horizon = k;
  vt.space = std::move(space);
  const auto& sp = vt.space;
  const std::size_t n = g.players().size();
  vt.values.resize(static_cast<std::size_t>(k) + 1);
  vt.strategies.resize(static_cast<std::size_t>(k) + 1);
  vt.choices.resize(static_cast<std::size_t>(k) + 1);
  for (std::size_t id = 0; id < sp.states.size(); ++id) vt.values[0][static_cast<int>(id)] = std::vector<double>(n, 0.0);

  for (int t = 1; t <= k; ++t) {
    const auto& prev = vt.values[static_cast<std::size_t>(t - 1)];
    std::vector<int> layer;
    for (std::size_t id = 0; id < sp.states.size(); ++id)
      if (sp.depth[id] <= k - t) layer.push_back(static_cast<int>(id));

    struct Result {
      std::shared_ptr<const nlp::SwpeResult> swpe;
      std::string error;
      int inconclusive = 0;
    };
    std::vector<Result> results(layer.size());

    auto solve = [&](std::size_t q) {
      const int id = layer[q];
      const auto& info = sp.info[static_cast<std::size_t>(id)];
      const auto& succ = sp.successors[static_cast<std::size_t>(id)];
      StageKey key{t, id, {}};
      for (const auto& row : succ)
        for (const auto& [to, p] : row) {
          auto it = prev.find(to);
          if (to < 0 || it == prev.end())
            throw MissingContinuation(to_string(sp.states[static_cast<std::size_t>(id)], g.variables()));
          key.cont.insert(key.cont.end(), it->second.begin(), it->second.end());
        }
      if (cache)
        if (auto hit = cache->find(key)) {
          results[q].swpe = hit;
          return;
        }
      auto stage = stage_game(g.players(), info, [&](std::size_t j, std::size_t s) {
        return &prev.at(succ[j][s].first);
      });
      nlp::SolverConfig sub = cfg;
      sub.threads = 1;
      sub.seed = stage_seed(cfg.seed, t, id);
      try {
        auto res = std::make_shared<const nlp::SwpeResult>(nlp::find_swpe(stage, sub));
        if (cache) cache->insert(key, res);
        results[q].swpe = std::move(res);
      } catch (const nlp::NoEquilibriumFound& e) {
        results[q].error = to_string(sp.states[static_cast<std::size_t>(id)], g.variables());
        results[q].inconclusive = e.inconclusive();
      }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), layer.size());
    if (workers <= 1) {
      for (std::size_t q = 0; q < layer.size(); ++q) solve(q);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr error;
      std::atomic<bool> failed{false};
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t q; (q = next.fetch_add(1)) < layer.size();) {
            try {
              solve(q);
            } catch (...) {
              if (!failed.exchange(true)) error = std::current_exception();
            }
          }
        });
      for (auto& th : pool) th.join();
      if (error) std::rethrow_exception(error);
    }

    for (std::size_t q = 0; q < layer.size(); ++q) {
      const int id = layer[q];
      if (!results[q].swpe) throw StageFailure(t, results[q].error, results[q].inconclusive);
      const auto& res = *results[q].swpe;
      const game::EquilibriumCandidate* chosen = &res.best;
      if (select.kind == Selection::Kind::RandomUniform) {
        nlp::detail::Rng rng(stage_seed(select.seed, t, id));
        auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(res.all.size()));
        chosen = &res.all[std::min(pick, res.all.size() - 1)];
      }
      vt.strategies[static_cast<std::size_t>(t)][id] = *chosen;
      vt.values[static_cast<std::size_t>(t)][id] = chosen->payoffs;
      vt.choices[static_cast<std::size_t>(t)][id] = static_cast<int>(res.all.size());
    }
  }
  return vt;
}

std::shared_ptr<const nlp::SwpeResult> StageCache::find(const StageKey& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = map_.find(key);
  return it == map_.end() ? nullptr : it->second;
}

void StageCache::insert(const StageKey& key, std::shared_ptr<const nlp::SwpeResult> value) {
  std::lock_guard<std::mutex> lock(mu_);
  map_.emplace(key, std::move(value));
}

}  // namespace detail

ValueTable backward_induction(const Pcsg& g, int k, const nlp::SolverConfig& cfg, Selection select) {
  if (k < 1) throw std::invalid_argument("horizon must be at least 1");
  return detail::backward_induction(g, explore(g, k), k, cfg, select, nullptr);
}

std::vector<std::map<int, double>> visit_distribution(const ValueTable& vt) {
  const auto& sp = vt.space;
  std::vector<std::map<int, double>> out(static_cast<std::size_t>(vt.horizon));
  if (vt.horizon == 0) return out;
  out[0][0] = 1.0;
  for (int j = 0; j + 1 < vt.horizon; ++j) {
    const int t = vt.horizon - j;
    auto& next = out[static_cast<std::size_t>(j) + 1];
    for (const auto& [id, w] : out[static_cast<std::size_t>(j)]) {
      const auto& sigma = vt.strategies[static_cast<std::size_t>(t)].at(id).profile;
      const auto& info = sp.info[static_cast<std::size_t>(id)];
      const auto& succ = sp.successors[static_cast<std::size_t>(id)];
      std::size_t joints = info.transitions.size();
      for (std::size_t jt = 0; jt < joints; ++jt) {
        // Decode the joint index, last player fastest.
        double pj = 1.0;
        std::size_t rem = jt;
        for (std::size_t i = info.actions.size(); i-- > 0;) {
          pj *= sigma.probs[i][rem % info.actions[i].size()];
          rem /= info.actions[i].size();
        }
        if (pj == 0.0) continue;
        for (const auto& [to, p] : succ[jt]) next[to] += w * pj * p;
      }
    }
  }
  return out;
}

}  // namespace pg::pcsg
