#pragma once

#include <cstdint>
#include <vector>

#include "decal/types.hpp"

namespace decal {

/// The Bayes rule induced by a loss matrix: picks the action with minimal
/// expected loss under the predicted distribution, lowest index on ties.
class DecisionRule {
public:
  explicit DecisionRule(LossMatrix loss) : loss_(std::move(loss)) {}

  const LossMatrix& loss() const { return loss_; }
  int num_actions() const { return loss_.num_actions(); }

  int decide(const ProbabilityVector& q) const { return decide_raw(q.values()); }
  int decide_raw(const Eigen::VectorXd& q) const;

private:
  LossMatrix loss_;
};

/// argmin_a <q, loss(a, .)>, ties to the lowest action index.
int bayes_decide(const LossMatrix& loss, const ProbabilityVector& q);

/// Refrain-option loss over C class actions plus an abstain action (index C):
/// 0/1 loss on the class actions, constant beta for abstaining. Its Bayes
/// rule reports argmax q when max q > 1 - beta and abstains otherwise.
LossMatrix make_refrain_loss(double beta, int num_classes);

/// One-vs-rest screening loss with actions T=0, F=1, abstain=2:
/// abstaining costs 1, claiming class c costs beta1 on a miss, denying it
/// costs beta2 when c occurs. Accepts any real beta1, beta2.
LossMatrix make_classwise_loss(int class_index, double beta1, double beta2, int num_classes);

/// Expected loss if outcomes were drawn from the predictions themselves:
/// weighted mean of <p_i, loss(rule(p_i), .)>. Computable without labels.
double expected_loss_simulated(const CalibrationDataset& dataset, const LossMatrix& loss,
                               const DecisionRule& rule);

/// Realized expected loss: weighted mean of loss(rule(p_i), y_i).
double expected_loss_true(const CalibrationDataset& dataset, const LossMatrix& loss,
                          const DecisionRule& rule);

struct LossGapReport {
  double simulated_loss = 0.0;
  double true_loss = 0.0;
  double gap = 0.0;  // |simulated - true| / sup_norm
};

/// Normalized disagreement between simulated and realized loss under the
/// Bayes rule of `loss`. Rejects the all-zero loss (norm 0).
LossGapReport loss_gap(const CalibrationDataset& dataset, const LossMatrix& loss);

/// `count` loss matrices with i.i.d. standard normal entries, deterministic
/// for a given seed.
std::vector<LossMatrix> sample_random_losses(int num_actions, int num_classes, int count,
                                             std::uint64_t seed);

}  // namespace decal
