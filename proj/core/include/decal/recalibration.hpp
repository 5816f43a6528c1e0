#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decal/partitions.hpp"
#include "decal/types.hpp"

namespace decal {

/// One trained post-processing step: a partition of the simplex plus an
/// additive adjustment per cell. Hard layers shift by the cell's stored
/// vector, soft layers by adjustment * memberships(q). Applying a layer
/// always re-projects onto the simplex.
class Layer {
public:
  /// Hard layer: shifts is K x C, row a added when q lands in cell a.
  /// Soft layer: shifts is C x K, the map b(q) -> shifts * b(q).
  Layer(PartitionWeights partition, Eigen::MatrixXd shifts);

  const PartitionWeights& partition() const { return partition_; }
  const Eigen::MatrixXd& shifts() const { return shifts_; }

  Eigen::VectorXd apply_raw(const Eigen::VectorXd& q) const;

private:
  PartitionWeights partition_;
  Eigen::MatrixXd shifts_;
};

enum class TerminationReason { tolerance_met, max_iterations };

struct IterationRecord {
  double squared_value = 0.0;  // certified squared objective before the update
  double norm_value = 0.0;     // certified norm objective before the update
  double l2_error = 0.0;       // empirical L2 error after the update
};

struct TrainTrace {
  double initial_l2 = 0.0;
  std::vector<IterationRecord> iterations;
  double final_squared = 0.0;  // certificate at termination
  double final_norm = 0.0;
  TerminationReason termination_reason = TerminationReason::tolerance_met;
};

/// An ordered stack of layers; apply() runs them in training order,
/// projecting onto the simplex after each shift. An empty model is the
/// identity.
class RecalibrationModel {
public:
  RecalibrationModel(int num_classes, int num_actions, double tolerance)
      : num_classes_(num_classes), num_actions_(num_actions), tolerance_(tolerance) {}

  int num_classes() const { return num_classes_; }
  int num_actions() const { return num_actions_; }
  double tolerance() const { return tolerance_; }
  const std::vector<Layer>& layers() const { return layers_; }

  void push_layer(Layer layer);

  ProbabilityVector apply(const ProbabilityVector& q) const;
  Eigen::VectorXd apply_raw(Eigen::VectorXd q) const;

  /// Applies only the first `count` layers (a training-trajectory prefix).
  Eigen::VectorXd apply_prefix_raw(Eigen::VectorXd q, std::size_t count) const;

  /// JSON round-trip; doubles are emitted with enough digits to be
  /// reconstructed bit-exactly.
  std::string to_json_string(int indent = -1) const;
  static RecalibrationModel from_json_string(const std::string& text);

private:
  int num_classes_;
  int num_actions_;
  double tolerance_;
  std::vector<Layer> layers_;
};

/// Iterative partition-and-shift recalibration. Each round searches for the
/// worst partition, stops once the certified squared objective drops below
/// epsilon^2 / K, and otherwise shifts predictions toward the per-cell label
/// means: hard mode uses cell-mean adjustments, soft mode the least-squares
/// adjustment through the cell co-membership matrix (pseudo-inverse when
/// singular). The iteration cap ceil(8 K / epsilon^2) absorbs an inexact
/// inner search; hitting it is reported, not thrown.
struct RecalibrateOptions {
  int num_actions = 2;
  double epsilon = 0.05;
  PartitionMode mode = PartitionMode::soft;
  SearchConfig search;
  std::optional<int> max_layers;  // extra cap on top of ceil(8 K / eps^2)
};

std::pair<RecalibrationModel, TrainTrace> recalibrate(const CalibrationDataset& dataset,
                                                      const RecalibrateOptions& options);

/// Loss-specific compression: predictions collapse to the weighted mean
/// prediction of their Bayes-action cell, so the compressed predictor has
/// support at most K while every Bayes action is preserved.
class LossCompression {
public:
  LossCompression(LossMatrix loss, std::vector<std::optional<ProbabilityVector>> cell_means);

  const LossMatrix& loss() const { return loss_; }
  /// Mean prediction of each action cell; empty cells hold nullopt.
  const std::vector<std::optional<ProbabilityVector>>& cell_means() const { return cell_means_; }

  /// q -> mean prediction of the cell that q's Bayes action selects.
  /// Falls back to q itself for an action unseen during construction.
  ProbabilityVector compress(const ProbabilityVector& q) const;

  /// Dataset with every prediction compressed (labels and weights kept).
  CalibrationDataset compress_dataset(const CalibrationDataset& dataset) const;

private:
  LossMatrix loss_;
  std::vector<std::optional<ProbabilityVector>> cell_means_;
};

LossCompression compress_for_loss(const CalibrationDataset& dataset, const LossMatrix& loss);

}  // namespace decal
