#include <benchmark/benchmark.h>

#include <random>

#include "decal/numeric.hpp"

namespace {

static void BM_ProjectToSimplex(benchmark::State& state) {
  const int C = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(C);
  for (int c = 0; c < C; ++c) v[c] = normal(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::project_to_simplex_raw(v));
  }
}
BENCHMARK(BM_ProjectToSimplex)->Arg(3)->Arg(10)->Arg(100)->Arg(1000);

static void BM_PseudoInverse(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) m(i, j) = normal(rng);
  }
  const Eigen::MatrixXd psd = m * m.transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(decal::pseudo_inverse(psd));
  }
}
BENCHMARK(BM_PseudoInverse)->Arg(2)->Arg(5)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
