#include <benchmark/benchmark.h>

#include <random>

#include "decal/partitions.hpp"
#include "decal/synthetic.hpp"

namespace {

decal::CalibrationDataset bench_dataset(int classes, std::int64_t samples) {
  return decal::generate_synthetic(classes, samples, 1.0,
                                   decal::DistortionSpec::parse("temperature:0.5"), 7)
      .dataset;
}

Eigen::MatrixXd bench_weights(int cells, int classes) {
  Eigen::MatrixXd w(cells, classes);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int a = 0; a < cells; ++a) {
    for (int c = 0; c < classes; ++c) w(a, c) = normal(rng);
  }
  return w;
}

static void BM_EvaluateObjectiveHard(benchmark::State& state) {
  const auto data = bench_dataset(7, state.range(0));
  const decal::PartitionWeights partition(decal::PartitionMode::hard, bench_weights(3, 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::evaluate_objective(data, partition));
  }
}
BENCHMARK(BM_EvaluateObjectiveHard)->Arg(1000)->Arg(10000)->Arg(50000);

static void BM_EvaluateObjectiveSoft(benchmark::State& state) {
  const auto data = bench_dataset(7, state.range(0));
  const decal::PartitionWeights partition(decal::PartitionMode::soft, bench_weights(3, 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::evaluate_objective(data, partition));
  }
}
BENCHMARK(BM_EvaluateObjectiveSoft)->Arg(1000)->Arg(10000)->Arg(50000);

static void BM_ObjectiveGradient(benchmark::State& state) {
  const auto data = bench_dataset(7, state.range(0));
  const Eigen::MatrixXd w = bench_weights(3, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::objective_gradient(data, w));
  }
}
BENCHMARK(BM_ObjectiveGradient)->Arg(1000)->Arg(10000)->Arg(50000);

static void BM_FindWorstPartition(benchmark::State& state) {
  const auto data = bench_dataset(3, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::find_worst_partition(data, 2, decal::SearchConfig::with_seed(5)));
  }
}
BENCHMARK(BM_FindWorstPartition)->Unit(benchmark::kMillisecond)->Arg(1000)->Arg(5000);

}  // namespace
