#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decal/calibration_checks.hpp"
#include "decal/io.hpp"
#include "decal/recalibration.hpp"
#include "decal/synthetic.hpp"

namespace decal {

struct TemperatureGrid {
  double t_min = 0.05;
  double t_max = 20.0;
  int points = 200;
  double refine_tol = 1e-4;
};

struct TemperatureScaleResult {
  double temperature = 1.0;
  Eigen::MatrixXd probabilities;  // softmax(logits / temperature)
};

/// Picks the temperature minimizing weighted NLL over a geometric grid, then
/// refines by golden section; the refinement is kept only when it strictly
/// improves, so flat objectives return the first grid optimum.
TemperatureScaleResult temperature_scale(const Eigen::MatrixXd& logits,
                                         const std::vector<int>& labels,
                                         const Eigen::VectorXd& weights,
                                         const TemperatureGrid& grid = {});

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int num_actions = 2;
  double epsilon = 0.05;
  int num_random_losses = 500;
  double calibration_fraction = 0.6;
  double test_fraction = 0.4;
  PartitionMode mode = PartitionMode::soft;
  bool temperature_scaling = false;
  std::optional<int> max_steps;  // cap on recalibration layers

  // Search knobs for the inner adversary (seed is derived from `seed`).
  int search_restarts = 10;
  int search_steps = 300;
  double search_step_size = 0.5;

  // Data source: a file when input_path is set, synthetic otherwise.
  std::optional<std::string> input_path;
  DatasetFormat input_format = DatasetFormat::csv;
  bool renormalize = false;
  int synthetic_classes = 3;
  std::int64_t synthetic_samples = 10000;
  double synthetic_alpha = 1.0;
  DistortionSpec synthetic_distortion;

  std::string to_json_string(int indent = -1) const;
  static ExperimentConfig from_json_string(const std::string& text);
};

struct SplitMetrics {
  double avg_loss_gap = 0.0;
  double worst_loss_gap = 0.0;
  double avg_decision_loss = 0.0;
  double accuracy = 0.0;
  double l2_error = 0.0;
};

struct StepMetrics {
  SplitMetrics calibration;
  SplitMetrics test;
};

struct NotionReports {
  CalibrationReport decision;
  CalibrationReport confidence;
  CalibrationReport classwise;
  CalibrationReport distribution;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::optional<double> temperature;
  TerminationReason termination_reason = TerminationReason::tolerance_met;
  std::vector<StepMetrics> steps;  // index = number of layers applied, 0..T
  TrainTrace trace;
  NotionReports step0_calibration;
  NotionReports step0_test;
  NotionReports final_calibration;
  NotionReports final_test;

  std::string to_json_string(int indent = -1) const;
  std::string steps_csv() const;
};

struct ExperimentOutput {
  ExperimentReport report;
  RecalibrationModel model;
  CalibrationDataset calibration_step0;  // post temperature scaling, pre model
  CalibrationDataset test_step0;
};

/// Full pipeline: data, optional temperature scaling, disjoint seeded
/// calibration/test split, random losses, recalibration, and per-step
/// metrics on both splits. Identical configs produce byte-identical reports.
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Metrics of one prediction matrix against labels/weights under a loss set.
SplitMetrics evaluate_split(const Eigen::MatrixXd& predictions, const std::vector<int>& labels,
                            const Eigen::VectorXd& weights,
                            const std::vector<LossMatrix>& losses);

}  // namespace decal
