#include "decal/decisions.hpp"

#include <cmath>
#include <random>
#include <string>

#include "decal/errors.hpp"
#include "decal/parallel.hpp"

namespace decal {

int DecisionRule::decide_raw(const Eigen::VectorXd& q) const {
  if (q.size() != loss_.num_classes()) {
    throw invalid_input_error("decision rule expects " + std::to_string(loss_.num_classes()) +
                              " classes, got " + std::to_string(q.size()));
  }
  const Eigen::VectorXd expected = loss_.entries() * q;
  int best = 0;
  for (int a = 1; a < expected.size(); ++a) {
    if (expected[a] < expected[best]) best = a;
  }
  return best;
}

int bayes_decide(const LossMatrix& loss, const ProbabilityVector& q) {
  return DecisionRule(loss).decide(q);
}

LossMatrix make_refrain_loss(double beta, int num_classes) {
  if (beta < 0.0 || beta > 1.0) {
    throw invalid_input_error("refrain loss beta must lie in [0, 1]");
  }
  if (num_classes < 2) throw invalid_input_error("refrain loss needs at least 2 classes");
  Eigen::MatrixXd entries =
      Eigen::MatrixXd::Ones(num_classes + 1, num_classes);
  entries.topRows(num_classes).diagonal().setZero();
  entries.row(num_classes).setConstant(beta);
  return LossMatrix(std::move(entries));
}

LossMatrix make_classwise_loss(int class_index, double beta1, double beta2, int num_classes) {
  if (num_classes < 2) throw invalid_input_error("classwise loss needs at least 2 classes");
  if (class_index < 0 || class_index >= num_classes) {
    throw invalid_input_error("classwise loss class index out of range");
  }
  Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(3, num_classes);
  entries.row(0).setConstant(beta1);  // claim c: pay beta1 unless y == c
  entries(0, class_index) = 0.0;
  entries(1, class_index) = beta2;    // deny c: pay beta2 when y == c
  entries.row(2).setConstant(1.0);    // abstain
  return LossMatrix(std::move(entries));
}

namespace {

void check_dims(const CalibrationDataset& dataset, const LossMatrix& loss,
                const DecisionRule& rule) {
  if (loss.num_classes() != dataset.num_classes() ||
      rule.loss().num_classes() != dataset.num_classes()) {
    throw invalid_input_error("loss/rule class count does not match dataset");
  }
}

}  // namespace

double expected_loss_simulated(const CalibrationDataset& dataset, const LossMatrix& loss,
                               const DecisionRule& rule) {
  check_dims(dataset, loss, rule);
  if (loss.num_actions() != rule.num_actions()) {
    throw invalid_input_error("loss and rule must share one action space");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd q = dataset.predictions().row(i).transpose();
    acc += dataset.weight(i) * loss.entries().row(rule.decide_raw(q)).dot(q.transpose());
  }
  return acc / dataset.total_weight();
}

double expected_loss_true(const CalibrationDataset& dataset, const LossMatrix& loss,
                          const DecisionRule& rule) {
  check_dims(dataset, loss, rule);
  if (loss.num_actions() != rule.num_actions()) {
    throw invalid_input_error("loss and rule must share one action space");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd q = dataset.predictions().row(i).transpose();
    acc += dataset.weight(i) * loss(rule.decide_raw(q), dataset.label(i));
  }
  return acc / dataset.total_weight();
}

LossGapReport loss_gap(const CalibrationDataset& dataset, const LossMatrix& loss) {
  const double norm = loss.sup_norm();
  if (norm <= 0.0) {
    throw invalid_input_error("loss gap is undefined for the all-zero loss");
  }
  const DecisionRule rule(loss);
  LossGapReport report;
  report.simulated_loss = expected_loss_simulated(dataset, loss, rule);
  report.true_loss = expected_loss_true(dataset, loss, rule);
  report.gap = std::abs(report.simulated_loss - report.true_loss) / norm;
  return report;
}

std::vector<LossMatrix> sample_random_losses(int num_actions, int num_classes, int count,
                                             std::uint64_t seed) {
  if (count < 1) throw invalid_input_error("need at least one random loss");
  std::mt19937_64 rng(derive_seed(seed, 0x6c6f7373ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<LossMatrix> losses;
  losses.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    Eigen::MatrixXd entries(num_actions, num_classes);
    for (int a = 0; a < num_actions; ++a) {
      for (int c = 0; c < num_classes; ++c) entries(a, c) = normal(rng);
    }
    losses.emplace_back(std::move(entries));
  }
  return losses;
}

}  // namespace decal
