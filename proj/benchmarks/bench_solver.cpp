#include <benchmark/benchmark.h>

#include "pgsolve/modelio.hpp"
#include "pgsolve/nlp.hpp"
#include "pgsolve/pcsg.hpp"

using namespace pg;

namespace {

void solve(benchmark::State& state, const game::Nfpg& g) {
  for (auto _ : state) benchmark::DoNotOptimize(nlp::find_swpe(g, {}));
}

void BM_Confidence(benchmark::State& s) { solve(s, modelio::confidence_game()); }
void BM_Example2(benchmark::State& s) { solve(s, modelio::example2_game()); }
void BM_Ultimatum(benchmark::State& s) { solve(s, modelio::ultimatum_game(1, 1)); }
void BM_Crossing(benchmark::State& s) { solve(s, modelio::crossing_game(static_cast<int>(s.range(0)))); }
void BM_Cyclist(benchmark::State& s) { solve(s, modelio::cyclist_vehicle_game()); }

void BM_GridOracle(benchmark::State& s) {
  const auto g = modelio::crossing_game(2);
  for (auto _ : s) benchmark::DoNotOptimize(nlp::grid_oracle(g, static_cast<int>(s.range(0)), 0.05));
}

void BM_Explore(benchmark::State& s) {
  const int k = static_cast<int>(s.range(0));
  const auto g = modelio::crossing_multi_game(1, ratio(1, 2), k);
  for (auto _ : s) benchmark::DoNotOptimize(pcsg::model_stats(g, k));
}

void BM_BackwardInduction(benchmark::State& s) {
  const int k = static_cast<int>(s.range(0));
  const auto g = modelio::crossing_multi_game(1, Rational(static_cast<int>(s.range(1))), k);
  for (auto _ : s) benchmark::DoNotOptimize(pcsg::backward_induction(g, k, {}, pcsg::Selection::sw_optimal()));
}

}  // namespace

BENCHMARK(BM_Confidence)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Example2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ultimatum)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Crossing)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cyclist)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridOracle)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Explore)->DenseRange(5, 10, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardInduction)->Args({3, 0})->Args({3, 1})->Args({5, 0})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
