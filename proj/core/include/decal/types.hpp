#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "decal/errors.hpp"

namespace decal {

/// A point on the C-class probability simplex. Entries are nonnegative and
/// sum to one; construction renormalizes sums within 1e-6 of one and rejects
/// anything further off.
class ProbabilityVector {
public:
  static constexpr double kSumTolerance = 1e-6;

  explicit ProbabilityVector(Eigen::VectorXd values);
  ProbabilityVector(std::initializer_list<double> values);

  int num_classes() const { return static_cast<int>(values_.size()); }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int c) const { return values_[c]; }

  bool operator==(const ProbabilityVector& other) const { return values_ == other.values_; }

private:
  Eigen::VectorXd values_;
};

/// An observed class label, stored as its index; equivalent to a one-hot
/// vector of length C.
struct LabelObservation {
  int class_index = 0;
};

struct Sample {
  ProbabilityVector prediction;
  LabelObservation label;
  double weight = 1.0;
};

/// Paired (prediction, label, weight) samples. All empirical expectations in
/// this library are weight-normalized sums over such a dataset. Columnar
/// storage keeps the per-iteration linear algebra dense; rows of
/// predictions() are valid simplex points by construction.
class CalibrationDataset {
public:
  CalibrationDataset(int num_classes, const std::vector<Sample>& samples);
  /// Columnar constructor; prediction rows are validated exactly like
  /// ProbabilityVector (renormalized within 1e-6).
  CalibrationDataset(Eigen::MatrixXd predictions, std::vector<int> labels,
                     Eigen::VectorXd weights);

  int num_classes() const { return static_cast<int>(predictions_.cols()); }
  std::int64_t size() const { return predictions_.rows(); }
  double total_weight() const { return total_weight_; }

  const Eigen::MatrixXd& predictions() const { return predictions_; }
  const std::vector<int>& labels() const { return labels_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  ProbabilityVector prediction(std::int64_t i) const;
  int label(std::int64_t i) const { return labels_[static_cast<std::size_t>(i)]; }
  double weight(std::int64_t i) const { return weights_[i]; }

  /// One-hot label matrix (N x C).
  const Eigen::MatrixXd& one_hot_labels() const;

  /// Copy of this dataset with the prediction matrix replaced (labels and
  /// weights kept). Rows are validated.
  CalibrationDataset with_predictions(Eigen::MatrixXd predictions) const;

  /// Weighted mean of the one-hot labels: the empirical class marginals.
  Eigen::VectorXd label_mean() const;

  /// Weighted mean of ||prediction - one_hot(label)||^2.
  double l2_error() const;

  /// Weighted fraction of samples whose argmax prediction equals the label.
  double accuracy() const;

private:
  void validate_and_finalize();

  Eigen::MatrixXd predictions_;
  std::vector<int> labels_;
  Eigen::VectorXd weights_;
  double total_weight_ = 0.0;
  Eigen::MatrixXd one_hot_cache_;
};

/// A K-action decision task: entries(a, y) is the loss of playing action a
/// when the outcome is class y. Entries may have either sign.
class LossMatrix {
public:
  LossMatrix(int num_actions, int num_classes);
  explicit LossMatrix(Eigen::MatrixXd entries);

  int num_actions() const { return static_cast<int>(entries_.rows()); }
  int num_classes() const { return static_cast<int>(entries_.cols()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(int action, int class_index) const { return entries_(action, class_index); }

  /// Row of per-class losses for one action.
  Eigen::VectorXd action_losses(int action) const { return entries_.row(action); }

  /// max_a ||entries(a, .)||_2 — the normalizer used for approximate
  /// calibration and the loss gap.
  double sup_norm() const;

  LossMatrix scaled(double factor) const { return LossMatrix(entries_ * factor); }

private:
  Eigen::MatrixXd entries_;
};

enum class PartitionMode { hard, soft };

/// A linear K-cell carving of the simplex: hard mode is the argmax
/// classifier over <q, w_a> (ties to the lowest action), soft mode the
/// softmax relaxation of the same scores.
class PartitionWeights {
public:
  PartitionWeights(PartitionMode mode, Eigen::MatrixXd w);

  PartitionMode mode() const { return mode_; }
  int num_cells() const { return static_cast<int>(w_.rows()); }
  int num_classes() const { return static_cast<int>(w_.cols()); }
  const Eigen::MatrixXd& w() const { return w_; }

  /// Hard cell index of q (lowest index wins ties).
  int hard_cell(const Eigen::VectorXd& q) const;

  /// Membership vector b(q, .): an indicator in hard mode, a softmax in
  /// soft mode. Always nonnegative and sums to one.
  Eigen::VectorXd memberships(const Eigen::VectorXd& q) const;

  PartitionWeights as_hard() const { return PartitionWeights(PartitionMode::hard, w_); }
  PartitionWeights as_soft() const { return PartitionWeights(PartitionMode::soft, w_); }

private:
  PartitionMode mode_;
  Eigen::MatrixXd w_;
};

/// Row-wise softmax of scores with the usual max-shift for stability.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

}  // namespace decal
