#include <benchmark/benchmark.h>

#include "decal/recalibration.hpp"
#include "decal/synthetic.hpp"

namespace {

static void BM_RecalibrateSoft(benchmark::State& state) {
  const auto synth = decal::generate_synthetic(
      3, state.range(0), 1.0, decal::DistortionSpec::parse("temperature:0.5"), 11);
  decal::RecalibrateOptions options;
  options.num_actions = 2;
  options.epsilon = 0.1;
  options.mode = decal::PartitionMode::soft;
  options.search = decal::SearchConfig::with_seed(9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::recalibrate(synth.dataset, options));
  }
}
BENCHMARK(BM_RecalibrateSoft)->Unit(benchmark::kMillisecond)->Arg(1000)->Arg(5000);

static void BM_ModelApply(benchmark::State& state) {
  const auto synth = decal::generate_synthetic(
      7, 5000, 1.0, decal::DistortionSpec::parse("temperature:0.5"), 13);
  decal::RecalibrateOptions options;
  options.num_actions = 3;
  options.epsilon = 0.1;
  options.search = decal::SearchConfig::with_seed(9);
  const auto [model, trace] = decal::recalibrate(synth.dataset, options);
  const Eigen::VectorXd q = synth.dataset.predictions().row(0).transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.apply_raw(q));
  }
}
BENCHMARK(BM_ModelApply);

}  // namespace
