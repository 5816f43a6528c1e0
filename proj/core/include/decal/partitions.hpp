#pragma once

#include <cstdint>
#include <utility>

#include "decal/types.hpp"

namespace decal {

/// Value of the miscalibration objective at one partition. per_cell_vectors
/// row a holds E_hat[(prediction - one_hot(label)) * b(prediction, a)];
/// norm_value sums their L2 norms (the certified quantity), squared_value
/// their squared norms (the search surrogate).
struct PartitionObjective {
  double squared_value = 0.0;
  double norm_value = 0.0;
  Eigen::MatrixXd per_cell_vectors;  // K x C
  Eigen::VectorXd per_cell_mass;     // K, sums to 1
};

struct SearchConfig {
  int restarts = 10;
  int steps = 300;
  double step_size = 0.5;
  std::uint64_t seed = 0;

  // Ascent housekeeping: a restart stops once the step size has collapsed
  // (every rejected step halves it).
  double min_step_size = 1e-12;

  static SearchConfig with_seed(std::uint64_t seed) {
    SearchConfig config;
    config.seed = seed;
    return config;
  }
};

/// Evaluates the partition objective on a dataset. Works for hard and soft
/// partitions; predicted outcomes never need sampling because
/// E[Y_hat f(p)] = E[p f(p)].
PartitionObjective evaluate_objective(const CalibrationDataset& dataset,
                                      const PartitionWeights& partition);

/// Exact gradient of squared_value with respect to the soft partition's
/// weight matrix w (K x C).
Eigen::MatrixXd objective_gradient(const CalibrationDataset& dataset, const Eigen::MatrixXd& w);

/// Gradient-ascent search for the worst K-cell partition: `restarts` random
/// starts plus one canonical start aligned with the most frequent argmax
/// classes, each ascending the soft squared objective with step halving.
/// Every start and every ascent endpoint is snapped to its hard argmax
/// partition and re-evaluated; the best certified norm_value wins, so the
/// result is always a member of the hard family and never below any of the
/// search's own initializations. Deterministic for a given config.seed.
std::pair<PartitionWeights, PartitionObjective> find_worst_partition(
    const CalibrationDataset& dataset, int num_cells, const SearchConfig& config);

/// Exhaustive worst-partition value over hard, linearly realizable
/// partitions, for small instances only: at most 16 distinct predictions,
/// and either C == 2 with K <= 3 (interval enumeration) or C == 3 with
/// K == 2 (all linearly separable dichotomies). Throws
/// unsupported_instance_error outside that envelope.
PartitionObjective oracle_worst_partition(const CalibrationDataset& dataset, int num_cells);

/// True when oracle_worst_partition accepts this instance.
bool oracle_supports(const CalibrationDataset& dataset, int num_cells);

}  // namespace decal
