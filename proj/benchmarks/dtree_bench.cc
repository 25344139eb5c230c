#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "shadowprobe/dtree.h"

namespace shadowprobe {
namespace {

Dataset NoisyNumeric(std::size_t rows, std::size_t cols, RandomSource& rng) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) names.push_back("f" + std::to_string(c));
  std::vector<Vector> x;
  std::vector<std::string> y;
  for (std::size_t r = 0; r < rows; ++r) {
    Vector v(cols);
    for (double& e : v) e = rng.Normal(0.0, 1.0);
    y.push_back(v[0] + 0.5 * v[1] + rng.Normal(0.0, 0.5) > 0 ? "P" : "NotP");
    x.push_back(std::move(v));
  }
  return Dataset::FromNumeric(names, x, y);
}

void BM_TrainTree(benchmark::State& state) {
  RandomSource gen(1);
  const Dataset ds = NoisyNumeric(static_cast<std::size_t>(state.range(0)), 8, gen);
  for (auto _ : state) {
    RandomSource rng(2);
    benchmark::DoNotOptimize(TrainTree(ds, TreeParams{}, rng));
  }
}
BENCHMARK(BM_TrainTree)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

void BM_Classify(benchmark::State& state) {
  RandomSource gen(3);
  const Dataset ds = NoisyNumeric(2048, 8, gen);
  RandomSource rng(4);
  const DecisionTree tree = TrainTree(ds, TreeParams{}, rng);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(Classify(tree, ds.row(i++ % ds.size())));
  state.counters["nodes"] = static_cast<double>(tree.NodeCount());
}
BENCHMARK(BM_Classify);

}  // namespace
}  // namespace shadowprobe
