#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "pgsolve/pcsg.hpp"

namespace pg::pcsg::detail {

// Stage solves repeat across experiment runs whenever the successor values agree.
struct StageKey {
  int t = 0;
  int state = 0;
  std::vector<double> cont;
  friend bool operator<(const StageKey& a, const StageKey& b) {
    return std::tie(a.t, a.state, a.cont) < std::tie(b.t, b.state, b.cont);
  }
};

class StageCache {
 public:
  std::shared_ptr<const nlp::SwpeResult> find(const StageKey& key) const;
  void insert(const StageKey& key, std::shared_ptr<const nlp::SwpeResult> value);

 private:
  mutable std::mutex mu_;
  std::map<StageKey, std::shared_ptr<const nlp::SwpeResult>> map_;
};

std::uint64_t stage_seed(std::uint64_t base, int t, int s);

game::Nfpg stage_game(const std::vector<std::string>& players, const StateInfo& info,
                      const std::function<const std::vector<double>*(std::size_t joint, std::size_t succ)>& cont);

ValueTable backward_induction(const Pcsg& g, StateSpace space, int k, const nlp::SolverConfig& cfg,
                              Selection select, StageCache* cache);

}  // namespace pg::pcsg::detail
