#pragma once

// Shared fixtures for the test suites.

#include <random>
#include <vector>

#include "decal/types.hpp"

namespace decal::testing {

// Two predictions at (.9,.1) and (.1,.9), each holding half the mass, with
// group label means (.7,.3) and (.3,.7). The worst 2-cell partition splits
// the two groups and scores 0.2 * sqrt(2) in the norm objective.
inline CalibrationDataset two_cell_dataset() {
  std::vector<Sample> samples{
      {ProbabilityVector{0.9, 0.1}, LabelObservation{0}, 0.35},
      {ProbabilityVector{0.9, 0.1}, LabelObservation{1}, 0.15},
      {ProbabilityVector{0.1, 0.9}, LabelObservation{0}, 0.15},
      {ProbabilityVector{0.1, 0.9}, LabelObservation{1}, 0.35},
  };
  return CalibrationDataset(2, samples);
}

// The same support but with predictions equal to the group label means, so
// every calibration notion is satisfied exactly.
inline CalibrationDataset two_cell_calibrated_dataset() {
  std::vector<Sample> samples{
      {ProbabilityVector{0.7, 0.3}, LabelObservation{0}, 0.35},
      {ProbabilityVector{0.7, 0.3}, LabelObservation{1}, 0.15},
      {ProbabilityVector{0.3, 0.7}, LabelObservation{0}, 0.15},
      {ProbabilityVector{0.3, 0.7}, LabelObservation{1}, 0.35},
  };
  return CalibrationDataset(2, samples);
}

// A C = 3 instance that is classwise calibrated to machine precision yet
// decision miscalibrated: four support points whose per-class conditional
// means cancel within every shared coordinate level while the vector-valued
// residuals do not. The best separable dichotomy scores 0.15 / sqrt(2).
inline CalibrationDataset classwise_counterexample_dataset() {
  const double a = 0.15;
  struct Group {
    ProbabilityVector q;
    Eigen::Vector3d label_mean;
  };
  const std::vector<Group> groups{
      {ProbabilityVector{0.50, 0.35, 0.15}, {0.50 + a, 0.35 - a, 0.15}},
      {ProbabilityVector{0.50, 0.15, 0.35}, {0.50 - a, 0.15 + a, 0.35}},
      {ProbabilityVector{0.15, 0.35, 0.50}, {0.15, 0.35 + a, 0.50 - a}},
      {ProbabilityVector{0.35, 0.15, 0.50}, {0.35, 0.15 - a, 0.50 + a}},
  };
  std::vector<Sample> samples;
  for (const Group& g : groups) {
    for (int c = 0; c < 3; ++c) {
      const double w = 0.25 * g.label_mean[c];
      if (w > 0.0) samples.push_back({g.q, LabelObservation{c}, w});
    }
  }
  return CalibrationDataset(3, samples);
}

inline constexpr double kCounterexampleDecisionGap = 0.10606601717798213;  // 0.15 / sqrt(2)

// A constant predictor sitting exactly on the empirical label marginals.
inline CalibrationDataset constant_predictor_dataset() {
  std::vector<Sample> samples{
      {ProbabilityVector{0.6, 0.4}, LabelObservation{0}, 3.0},
      {ProbabilityVector{0.6, 0.4}, LabelObservation{1}, 2.0},
  };
  return CalibrationDataset(2, samples);
}

// Random finite-support dataset: `groups` distinct predictions with random
// conditional label means realized through one weighted sample per class.
inline CalibrationDataset random_grouped_dataset(int num_classes, int groups, std::mt19937_64& rng,
                                                 bool calibrated = false) {
  std::uniform_real_distribution<double> uniform(0.05, 1.0);
  std::vector<Sample> samples;
  for (int g = 0; g < groups; ++g) {
    Eigen::VectorXd q(num_classes);
    for (int c = 0; c < num_classes; ++c) q[c] = uniform(rng);
    q /= q.sum();
    Eigen::VectorXd mean(num_classes);
    if (calibrated) {
      mean = q;
    } else {
      for (int c = 0; c < num_classes; ++c) mean[c] = uniform(rng);
      mean /= mean.sum();
    }
    const double mass = uniform(rng);
    for (int c = 0; c < num_classes; ++c) {
      samples.push_back({ProbabilityVector(q), LabelObservation{c}, mass * mean[c]});
    }
  }
  return CalibrationDataset(num_classes, samples);
}

inline LossMatrix zero_one_loss(int num_classes) {
  Eigen::MatrixXd entries = Eigen::MatrixXd::Ones(num_classes, num_classes);
  entries.diagonal().setZero();
  return LossMatrix(std::move(entries));
}

}  // namespace decal::testing
