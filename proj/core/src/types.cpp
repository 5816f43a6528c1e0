#include "decal/types.hpp"

#include <cmath>
#include <string>

namespace decal {
namespace {

void check_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (!v.allFinite()) {
    throw invalid_input_error(std::string(what) + " contains non-finite values");
  }
}

// Validates one probability row in place: nonnegative entries, sum within
// 1e-6 of one, then renormalizes. Tiny negative dust (from projections or
// text round-trips) is clamped.
using ProbabilityRowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

void normalize_probability_row(ProbabilityRowRef row, const char* what) {
  if (!row.allFinite()) {
    throw invalid_input_error(std::string(what) + " contains non-finite values");
  }
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    if (row[c] < 0.0) {
      if (row[c] < -1e-9) {
        throw invalid_input_error(std::string(what) + " has a negative entry");
      }
      row[c] = 0.0;
    }
  }
  const double sum = row.sum();
  if (std::abs(sum - 1.0) > ProbabilityVector::kSumTolerance) {
    throw invalid_input_error(std::string(what) + " sums to " + std::to_string(sum) +
                              ", more than 1e-6 away from 1");
  }
  row /= sum;
}

}  // namespace

ProbabilityVector::ProbabilityVector(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw invalid_input_error("probability vector needs at least 2 classes");
  }
  Eigen::RowVectorXd row = values_.transpose();
  normalize_probability_row(row, "probability vector");
  values_ = row.transpose();
}

ProbabilityVector::ProbabilityVector(std::initializer_list<double> values)
    : ProbabilityVector(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
          values.begin(), static_cast<Eigen::Index>(values.size())))) {}

CalibrationDataset::CalibrationDataset(int num_classes, const std::vector<Sample>& samples) {
  if (num_classes < 2) throw invalid_input_error("dataset needs at least 2 classes");
  if (samples.empty()) throw invalid_input_error("dataset is empty");
  predictions_.resize(static_cast<Eigen::Index>(samples.size()), num_classes);
  weights_.resize(static_cast<Eigen::Index>(samples.size()));
  labels_.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.prediction.num_classes() != num_classes) {
      throw invalid_input_error("sample " + std::to_string(i) + " has " +
                                std::to_string(s.prediction.num_classes()) +
                                " classes, dataset expects " + std::to_string(num_classes));
    }
    predictions_.row(static_cast<Eigen::Index>(i)) = s.prediction.values().transpose();
    labels_.push_back(s.label.class_index);
    weights_[static_cast<Eigen::Index>(i)] = s.weight;
  }
  validate_and_finalize();
}

CalibrationDataset::CalibrationDataset(Eigen::MatrixXd predictions, std::vector<int> labels,
                                       Eigen::VectorXd weights)
    : predictions_(std::move(predictions)), labels_(std::move(labels)),
      weights_(std::move(weights)) {
  if (predictions_.cols() < 2) throw invalid_input_error("dataset needs at least 2 classes");
  if (predictions_.rows() == 0) throw invalid_input_error("dataset is empty");
  if (static_cast<Eigen::Index>(labels_.size()) != predictions_.rows() ||
      weights_.size() != predictions_.rows()) {
    throw invalid_input_error("predictions, labels and weights disagree on sample count");
  }
  for (Eigen::Index i = 0; i < predictions_.rows(); ++i) {
    normalize_probability_row(predictions_.row(i),
                              ("prediction row " + std::to_string(i)).c_str());
  }
  validate_and_finalize();
}

void CalibrationDataset::validate_and_finalize() {
  const int C = num_classes();
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= C) {
      throw invalid_input_error("label " + std::to_string(labels_[i]) + " at sample " +
                                std::to_string(i) + " is outside [0, " + std::to_string(C) + ")");
    }
  }
  check_finite(weights_, "weights");
  if ((weights_.array() <= 0.0).any()) {
    throw invalid_input_error("sample weights must be strictly positive");
  }
  total_weight_ = weights_.sum();

  // Materialized up front so const datasets are freely shareable across threads.
  one_hot_cache_ = Eigen::MatrixXd::Zero(predictions_.rows(), predictions_.cols());
  for (Eigen::Index i = 0; i < predictions_.rows(); ++i) {
    one_hot_cache_(i, labels_[static_cast<std::size_t>(i)]) = 1.0;
  }
}

ProbabilityVector CalibrationDataset::prediction(std::int64_t i) const {
  return ProbabilityVector(predictions_.row(i).transpose());
}

const Eigen::MatrixXd& CalibrationDataset::one_hot_labels() const { return one_hot_cache_; }

CalibrationDataset CalibrationDataset::with_predictions(Eigen::MatrixXd predictions) const {
  return CalibrationDataset(std::move(predictions), labels_, weights_);
}

Eigen::VectorXd CalibrationDataset::label_mean() const {
  return one_hot_labels().transpose() * weights_ / total_weight_;
}

double CalibrationDataset::l2_error() const {
  const Eigen::MatrixXd diff = predictions_ - one_hot_labels();
  return (diff.rowwise().squaredNorm().dot(weights_)) / total_weight_;
}

double CalibrationDataset::accuracy() const {
  double hit = 0.0;
  for (Eigen::Index i = 0; i < predictions_.rows(); ++i) {
    Eigen::Index best = 0;
    predictions_.row(i).maxCoeff(&best);
    // maxCoeff already reports the first maximum, matching the tie rule.
    if (static_cast<int>(best) == labels_[static_cast<std::size_t>(i)]) hit += weights_[i];
  }
  return hit / total_weight_;
}

LossMatrix::LossMatrix(int num_actions, int num_classes)
    : entries_(Eigen::MatrixXd::Zero(num_actions, num_classes)) {
  if (num_actions < 1) throw invalid_input_error("loss matrix needs at least 1 action");
  if (num_classes < 2) throw invalid_input_error("loss matrix needs at least 2 classes");
}

LossMatrix::LossMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1) throw invalid_input_error("loss matrix needs at least 1 action");
  if (entries_.cols() < 2) throw invalid_input_error("loss matrix needs at least 2 classes");
  if (!entries_.allFinite()) throw invalid_input_error("loss matrix has non-finite entries");
}

double LossMatrix::sup_norm() const {
  return entries_.rowwise().norm().maxCoeff();
}

PartitionWeights::PartitionWeights(PartitionMode mode, Eigen::MatrixXd w)
    : mode_(mode), w_(std::move(w)) {
  if (w_.rows() < 1) throw invalid_input_error("partition needs at least 1 cell");
  if (w_.cols() < 2) throw invalid_input_error("partition weights need at least 2 classes");
  if (!w_.allFinite()) throw invalid_input_error("partition weights have non-finite entries");
}

int PartitionWeights::hard_cell(const Eigen::VectorXd& q) const {
  const Eigen::VectorXd scores = w_ * q;
  int best = 0;
  for (int a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[best]) best = a;  // strict: ties stay at the lowest index
  }
  return best;
}

Eigen::VectorXd PartitionWeights::memberships(const Eigen::VectorXd& q) const {
  if (q.size() != w_.cols()) {
    throw invalid_input_error("partition expects " + std::to_string(w_.cols()) +
                              " classes, got " + std::to_string(q.size()));
  }
  if (mode_ == PartitionMode::hard) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(w_.rows());
    b[hard_cell(q)] = 1.0;
    return b;
  }
  Eigen::VectorXd scores = w_ * q;
  scores.array() -= scores.maxCoeff();
  Eigen::VectorXd e = scores.array().exp();
  return e / e.sum();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out = scores.colwise() - scores.rowwise().maxCoeff();
  out = out.array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

}  // namespace decal
