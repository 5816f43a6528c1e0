#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "decal/calibration_checks.hpp"
#include "decal/decisions.hpp"
#include "decal/errors.hpp"
#include "decal/experiment.hpp"
#include "decal/io.hpp"
#include "decal/parallel.hpp"
#include "decal/synthetic.hpp"
#include "support.hpp"

using namespace decal;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("decal_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("csv dataset loading: probabilities, logits, weights, errors") {
  TempDir tmp;
  const std::string plain = tmp.file("plain.csv");
  write_text_file(plain, "p0,p1,label\n0.9,0.1,0\n0.1,0.9,1\n");
  const LoadedDataset loaded = load_dataset(plain, DatasetFormat::csv);
  CHECK(loaded.dataset.num_classes() == 2);
  CHECK(loaded.dataset.size() == 2);
  CHECK(loaded.dataset.weight(0) == 1.0);
  CHECK(!loaded.logits.has_value());

  const std::string logits = tmp.file("logits.csv");
  write_text_file(logits, "l0,l1,label\n2,0,0\n");
  const LoadedDataset from_logits = load_dataset(logits, DatasetFormat::csv);
  REQUIRE(from_logits.logits.has_value());
  const double e2 = std::exp(2.0);
  CHECK(from_logits.dataset.predictions()(0, 0) == doctest::Approx(e2 / (e2 + 1.0)).epsilon(1e-9));
  CHECK(from_logits.dataset.predictions()(0, 1) == doctest::Approx(1.0 / (e2 + 1.0)).epsilon(1e-9));

  const std::string weighted = tmp.file("weighted.csv");
  write_text_file(weighted, "p0,p1,label,weight\n0.5,0.5,0,2.5\n");
  CHECK(load_dataset(weighted, DatasetFormat::csv).dataset.weight(0) == doctest::Approx(2.5));

  const std::string off = tmp.file("off.csv");
  write_text_file(off, "p0,p1,label\n0.9,0.1,0\n0.3,0.2,1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(off, DatasetFormat::csv)),
                       doctest::Contains("line 3"), invalid_input_error);
  const LoadedDataset renorm = load_dataset(off, DatasetFormat::csv, /*renormalize=*/true);
  CHECK(renorm.dataset.predictions()(1, 0) == doctest::Approx(0.6));

  const std::string ragged = tmp.file("ragged.csv");
  write_text_file(ragged, "p0,p1,label\n0.9,0.1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(ragged, DatasetFormat::csv)),
                       doctest::Contains("line 2"), invalid_input_error);

  const std::string garbled = tmp.file("garbled.csv");
  write_text_file(garbled, "p0,p1,label\n0.9,zebra,0\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(garbled, DatasetFormat::csv)),
                       doctest::Contains("line 2"), invalid_input_error);

  CHECK_THROWS_AS(static_cast<void>(load_dataset(tmp.file("missing.csv"), DatasetFormat::csv)),
                  invalid_input_error);
}

TEST_CASE("dataset csv save/load round-trip preserves every bit") {
  TempDir tmp;
  std::mt19937_64 rng(23);
  const CalibrationDataset data = testing::random_grouped_dataset(3, 7, rng);
  const std::string path = tmp.file("round.csv");
  save_dataset_csv(path, data);
  const LoadedDataset loaded = load_dataset(path, DatasetFormat::csv);
  CHECK(loaded.dataset.predictions() == data.predictions());
  CHECK(loaded.dataset.weights() == data.weights());
  CHECK(loaded.dataset.labels() == data.labels());
}

TEST_CASE("json dataset and loss matrix formats") {
  TempDir tmp;
  const std::string path = tmp.file("data.json");
  write_text_file(path,
                  "{\"num_classes\":2,\"predictions\":[[0.9,0.1],[0.2,0.8]],"
                  "\"labels\":[0,1],\"weights\":[1.0,3.0]}");
  const LoadedDataset loaded = load_dataset(path, DatasetFormat::json);
  CHECK(loaded.dataset.size() == 2);
  CHECK(loaded.dataset.weight(1) == doctest::Approx(3.0));

  const LossMatrix loss = testing::zero_one_loss(3);
  const LossMatrix parsed = loss_matrix_from_json_string(loss_matrix_to_json_string(loss));
  CHECK(parsed.entries() == loss.entries());
  CHECK_THROWS_AS(loss_matrix_from_json_string("{\"entries\":[[0,1]]}"), invalid_input_error);
}

TEST_CASE("synthetic generation is deterministic and honors distortions") {
  const SyntheticData a = generate_synthetic(3, 200, 1.0, DistortionSpec{}, 42);
  const SyntheticData b = generate_synthetic(3, 200, 1.0, DistortionSpec{}, 42);
  CHECK(a.dataset.predictions() == b.dataset.predictions());
  CHECK(a.dataset.labels() == b.dataset.labels());
  CHECK(a.ground_truth == b.ground_truth);
  // Identity distortion: predictions equal the generating draws up to the
  // dataset's row renormalization.
  CHECK((a.dataset.predictions() - a.ground_truth).cwiseAbs().maxCoeff() <= 1e-12);

  const DistortionSpec temp = DistortionSpec::parse("temperature:0.5");
  const SyntheticData sharp = generate_synthetic(3, 200, 1.0, temp, 42);
  CHECK(sharp.ground_truth == a.ground_truth);  // same draws, distorted output
  // Sharpening increases every row's maximum.
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(sharp.dataset.predictions().row(i).maxCoeff() >=
          a.ground_truth.row(i).maxCoeff() - 1e-12);
  }

  const DistortionSpec swap = DistortionSpec::parse("swap:0,2,0.25");
  const SyntheticData swapped = generate_synthetic(3, 50, 1.0, swap, 7);
  for (Eigen::Index i = 0; i < 50; ++i) {
    CHECK(swapped.dataset.predictions()(i, 0) ==
          doctest::Approx(0.75 * swapped.ground_truth(i, 0)).epsilon(1e-9));
  }

  CHECK_THROWS_AS(DistortionSpec::parse("swap:0,0,0.5"), invalid_input_error);
  CHECK_THROWS_AS(DistortionSpec::parse("temperature:-1"), invalid_input_error);
  CHECK_THROWS_AS(DistortionSpec::parse("mystery"), invalid_input_error);
  CHECK(DistortionSpec::parse("temperature:0.5").to_string() == "temperature:0.5");
}

TEST_CASE("undistorted synthetic data is decision calibrated at scale") {
  const SyntheticData synth = generate_synthetic(3, 50000, 1.0, DistortionSpec{}, 1234);
  const CalibrationReport report =
      decision_gap(synth.dataset, 2, 0.02, SearchConfig::with_seed(9));
  CHECK(report.gap <= 0.02);

  const SyntheticData hot =
      generate_synthetic(3, 50000, 1.0, DistortionSpec::parse("temperature:0.5"), 1234);
  const CalibrationReport hot_report =
      decision_gap(hot.dataset, 2, 0.05, SearchConfig::with_seed(9));
  CHECK(hot_report.gap > 0.05);
}

TEST_CASE("temperature scaling recovers the generating scale") {
  // Predictions equal to the generating distribution: logits = log p are
  // already NLL-optimal, so the fitted temperature sits at 1.
  const SyntheticData synth = generate_synthetic(4, 20000, 1.0, DistortionSpec{}, 77);
  const Eigen::MatrixXd logits = synth.dataset.predictions().array().log();
  const TemperatureScaleResult fit =
      temperature_scale(logits, synth.dataset.labels(), synth.dataset.weights());
  CHECK(fit.temperature == doctest::Approx(1.0).epsilon(0.05));

  // Rescaling arithmetic: logits (2, 0) at t = 2.
  Eigen::MatrixXd two(1, 2);
  two << 2.0, 0.0;
  const Eigen::MatrixXd at2 = softmax_rows(two / 2.0);
  CHECK(at2(0, 0) == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(at2(0, 1) == doctest::Approx(0.2689414214).epsilon(1e-9));

  // Flat logits: NLL is constant in t; the first grid point wins.
  Eigen::MatrixXd flat(3, 2);
  flat.setConstant(0.7);
  const std::vector<int> labels{0, 1, 0};
  const TemperatureScaleResult degenerate =
      temperature_scale(flat, labels, Eigen::VectorXd::Ones(3));
  CHECK(degenerate.temperature == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("experiment on an already calibrated input stops at step zero") {
  TempDir tmp;
  const std::string path = tmp.file("perfect.csv");
  write_text_file(path, "p0,p1,label\n1,0,0\n0,1,1\n1,0,0\n0,1,1\n");

  ExperimentConfig config;
  config.seed = 5;
  config.num_actions = 2;
  config.epsilon = 0.05;
  config.num_random_losses = 10;
  config.calibration_fraction = 0.5;
  config.test_fraction = 0.5;
  config.input_path = path;
  const ExperimentOutput out = run_experiment(config);
  CHECK(out.report.steps.size() == 1);
  CHECK(out.model.layers().empty());
  CHECK(out.report.termination_reason == TerminationReason::tolerance_met);
  CHECK(out.report.steps[0].calibration.avg_loss_gap <= 1e-9);
}

TEST_CASE("experiment improves the loss gap and restores damaged accuracy") {
  ExperimentConfig config;
  config.seed = 20240801;
  config.num_actions = 2;
  config.epsilon = 0.05;
  config.num_random_losses = 25;
  config.synthetic_classes = 3;
  config.synthetic_samples = 4000;
  config.synthetic_distortion = DistortionSpec::parse("swap:0,1,0.5");
  const ExperimentOutput out = run_experiment(config);
  const ExperimentReport& report = out.report;

  REQUIRE(report.steps.size() >= 2);
  const SplitMetrics& first = report.steps.front().test;
  const SplitMetrics& last = report.steps.back().test;
  CHECK(last.avg_loss_gap < first.avg_loss_gap);
  CHECK(last.accuracy >= first.accuracy - 0.002);
  for (const StepMetrics& step : report.steps) {
    CHECK(step.calibration.worst_loss_gap >= step.calibration.avg_loss_gap);
    CHECK(step.test.worst_loss_gap >= step.test.avg_loss_gap);
  }
  CHECK(report.final_calibration.decision.gap <= config.epsilon);

  // Determinism: identical config, byte-identical report.
  const ExperimentOutput again = run_experiment(config);
  CHECK(again.report.to_json_string() == report.to_json_string());

  // Model round-trip reproduces the final test metrics exactly.
  const RecalibrationModel loaded =
      RecalibrationModel::from_json_string(out.model.to_json_string());
  Eigen::MatrixXd test_preds = out.test_step0.predictions();
  for (Eigen::Index i = 0; i < test_preds.rows(); ++i) {
    test_preds.row(i) = loaded.apply_raw(test_preds.row(i).transpose()).transpose();
  }
  const std::vector<LossMatrix> losses = sample_random_losses(
      config.num_actions, 3, config.num_random_losses, derive_seed(config.seed, 0x10555ULL));
  const SplitMetrics replayed =
      evaluate_split(test_preds, out.test_step0.labels(), out.test_step0.weights(), losses);
  CHECK(replayed.avg_loss_gap == last.avg_loss_gap);
  CHECK(replayed.worst_loss_gap == last.worst_loss_gap);
  CHECK(replayed.avg_decision_loss == last.avg_decision_loss);
  CHECK(replayed.accuracy == last.accuracy);
  CHECK(replayed.l2_error == last.l2_error);

  // The CSV table has one row per step plus the header.
  const std::string csv = report.steps_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(report.steps.size()) + 1);
}

TEST_CASE("temperature scaling inside the pipeline undoes a pure scale distortion") {
  // temperature(0.5) squares the generating probabilities, so the NLL fit on
  // log-prediction logits recovers t = 2 and step 0 starts nearly calibrated.
  ExperimentConfig config;
  config.seed = 31;
  config.num_actions = 2;
  config.epsilon = 0.05;
  config.num_random_losses = 10;
  config.synthetic_classes = 3;
  config.synthetic_samples = 12000;
  config.synthetic_distortion = DistortionSpec::parse("temperature:0.5");
  config.temperature_scaling = true;
  const ExperimentOutput out = run_experiment(config);
  REQUIRE(out.report.temperature.has_value());
  CHECK(*out.report.temperature == doctest::Approx(2.0).epsilon(0.1));
  CHECK(out.report.step0_calibration.decision.gap < 0.05);

  ExperimentConfig raw = config;
  raw.temperature_scaling = false;
  const ExperimentOutput untouched = run_experiment(raw);
  CHECK(untouched.report.step0_calibration.decision.gap >
        out.report.step0_calibration.decision.gap);
}

TEST_CASE("experiment config json round-trips") {
  ExperimentConfig config;
  config.seed = 99;
  config.num_actions = 3;
  config.epsilon = 0.04;
  config.temperature_scaling = true;
  config.synthetic_distortion = DistortionSpec::parse("swap:0,1,0.3");
  config.max_steps = 7;
  const ExperimentConfig parsed = ExperimentConfig::from_json_string(config.to_json_string());
  CHECK(parsed.to_json_string() == config.to_json_string());
  CHECK(parsed.max_steps == 7);
  CHECK_THROWS_AS(ExperimentConfig::from_json_string("{nope"), invalid_input_error);
}
