// decal: decision-calibration toolkit command line.
//
// Subcommands: verify, recalibrate, apply, loss-gap, simulate, experiment.
// Exit codes: 0 success, 1 verification failure (gap above epsilon),
// 2 invalid input or unsupported instance.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "decal/calibration_checks.hpp"
#include "decal/decisions.hpp"
#include "decal/errors.hpp"
#include "decal/experiment.hpp"
#include "decal/io.hpp"
#include "decal/recalibration.hpp"
#include "decal/synthetic.hpp"

namespace {

using nlohmann::json;

struct InputOptions {
  std::string path;
  std::string format = "csv";
  bool renormalize = false;
};

void add_input_options(CLI::App* cmd, InputOptions& input) {
  cmd->add_option("--input,-i", input.path, "Dataset file")->required();
  cmd->add_option("--format", input.format, "Input format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--renormalize", input.renormalize,
                "Accept probability rows that do not sum to 1 and rescale them");
}

decal::LoadedDataset load_input(const InputOptions& input) {
  return decal::load_dataset(input.path, decal::dataset_format_from_name(input.format),
                             input.renormalize);
}

void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << text << '\n';
  } else {
    decal::write_text_file(output_path, text);
  }
}

int run_verify(const InputOptions& input, int actions, double epsilon, std::uint64_t seed,
               const std::string& notion, const std::string& output_path) {
  const decal::CalibrationDataset data = load_input(input).dataset;
  const decal::SearchConfig search = decal::SearchConfig::with_seed(seed);

  std::vector<decal::CalibrationReport> reports;
  if (notion == "all" || notion == "decision") {
    reports.push_back(decal::decision_gap(data, actions, epsilon, search));
  }
  if (notion == "all" || notion == "confidence") {
    reports.push_back(decal::confidence_gap(data, epsilon));
  }
  if (notion == "all" || notion == "classwise") {
    reports.push_back(decal::classwise_gap(data, epsilon));
  }
  if (notion == "all" || notion == "distribution") {
    reports.push_back(decal::distribution_gap(data, epsilon));
  }

  json doc = json::object();
  bool all_passed = true;
  for (const decal::CalibrationReport& report : reports) {
    doc[decal::notion_name(report.notion)] = json::parse(report.to_json_string());
    all_passed = all_passed && report.passed;
  }
  emit(doc.dump(2), output_path);
  return all_passed ? 0 : 1;
}

int run_recalibrate(const InputOptions& input, int actions, double epsilon,
                    const std::string& mode, std::uint64_t seed, std::optional<int> max_steps,
                    const std::string& model_path, const std::string& trace_path) {
  const decal::CalibrationDataset data = load_input(input).dataset;
  decal::RecalibrateOptions options;
  options.num_actions = actions;
  options.epsilon = epsilon;
  options.mode = mode == "hard" ? decal::PartitionMode::hard : decal::PartitionMode::soft;
  options.search = decal::SearchConfig::with_seed(seed);
  options.max_layers = max_steps;
  const auto [model, trace] = decal::recalibrate(data, options);

  decal::write_text_file(model_path, model.to_json_string(2));

  json doc;
  doc["initial_l2"] = trace.initial_l2;
  doc["final_squared"] = trace.final_squared;
  doc["final_norm"] = trace.final_norm;
  doc["layers"] = model.layers().size();
  doc["termination_reason"] = trace.termination_reason == decal::TerminationReason::tolerance_met
                                  ? "tolerance_met"
                                  : "max_iterations";
  json iterations = json::array();
  for (const decal::IterationRecord& record : trace.iterations) {
    iterations.push_back({{"squared_value", record.squared_value},
                          {"norm_value", record.norm_value},
                          {"l2_error", record.l2_error}});
  }
  doc["iterations"] = std::move(iterations);
  emit(doc.dump(2), trace_path);
  return 0;
}

int run_apply(const InputOptions& input, const std::string& model_path,
              const std::string& output_path) {
  const decal::RecalibrationModel model =
      decal::RecalibrationModel::from_json_string(decal::read_text_file(model_path));
  decal::LoadedPredictions loaded = decal::load_predictions(
      input.path, decal::dataset_format_from_name(input.format), input.renormalize);
  if (loaded.predictions.cols() != model.num_classes()) {
    throw decal::invalid_input_error("model expects " + std::to_string(model.num_classes()) +
                                     " classes, input has " +
                                     std::to_string(loaded.predictions.cols()));
  }
  for (Eigen::Index i = 0; i < loaded.predictions.rows(); ++i) {
    loaded.predictions.row(i) =
        model.apply_raw(loaded.predictions.row(i).transpose()).transpose();
  }
  decal::save_predictions_csv(output_path, loaded.predictions, loaded.labels, loaded.weights);
  return 0;
}

int run_loss_gap(const InputOptions& input, const std::string& loss_path, int random_losses,
                 int actions, std::uint64_t seed, const std::string& output_path) {
  const decal::CalibrationDataset data = load_input(input).dataset;

  std::vector<decal::LossMatrix> losses;
  if (!loss_path.empty()) {
    losses.push_back(decal::loss_matrix_from_json_string(decal::read_text_file(loss_path)));
  } else {
    losses = decal::sample_random_losses(actions, data.num_classes(), random_losses, seed);
  }

  json items = json::array();
  double total = 0.0;
  double worst = 0.0;
  for (const decal::LossMatrix& loss : losses) {
    const decal::LossGapReport report = decal::loss_gap(data, loss);
    items.push_back({{"simulated_loss", report.simulated_loss},
                     {"true_loss", report.true_loss},
                     {"gap", report.gap}});
    total += report.gap;
    worst = std::max(worst, report.gap);
  }
  json doc;
  doc["losses"] = std::move(items);
  doc["average_gap"] = total / static_cast<double>(losses.size());
  doc["worst_gap"] = worst;
  emit(doc.dump(2), output_path);
  return 0;
}

int run_simulate(int classes, std::int64_t samples, double alpha, const std::string& distortion,
                 std::uint64_t seed, const std::string& output_path,
                 const std::string& truth_path) {
  const decal::SyntheticData data = decal::generate_synthetic(
      classes, samples, alpha, decal::DistortionSpec::parse(distortion), seed);
  decal::save_dataset_csv(output_path, data.dataset);
  if (!truth_path.empty()) {
    std::string header;
    for (int c = 0; c < classes; ++c) {
      if (c) header += ',';
      header += "p" + std::to_string(c);
    }
    decal::save_matrix_csv(truth_path, data.ground_truth, header);
  }
  return 0;
}

int run_experiment_cmd(const decal::ExperimentConfig& config, const std::string& output_path,
                       const std::string& csv_path, const std::string& model_path) {
  const decal::ExperimentOutput out = decal::run_experiment(config);
  emit(out.report.to_json_string(2), output_path);
  if (!csv_path.empty()) decal::write_text_file(csv_path, out.report.steps_csv());
  if (!model_path.empty()) decal::write_text_file(model_path, out.model.to_json_string(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decal: verify, recalibrate, and evaluate decision calibration of "
               "multi-class probabilistic predictions"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "Measure calibration gaps against a tolerance");
  InputOptions verify_input;
  add_input_options(verify, verify_input);
  int verify_actions = 2;
  double verify_epsilon = 0.05;
  std::uint64_t verify_seed = 0;
  std::string verify_notion = "all";
  std::string verify_output;
  verify->add_option("--actions,-k", verify_actions, "Number of decision actions K");
  verify->add_option("--epsilon,-e", verify_epsilon, "Calibration tolerance");
  verify->add_option("--seed", verify_seed, "Seed for the partition search");
  verify->add_option("--notion", verify_notion, "Which notion to check")
      ->check(CLI::IsMember({"all", "decision", "confidence", "classwise", "distribution"}));
  verify->add_option("--output,-o", verify_output, "Write the JSON report here (default stdout)");

  // recalibrate
  auto* recal = app.add_subcommand("recalibrate", "Train a decision-calibration post-processor");
  InputOptions recal_input;
  add_input_options(recal, recal_input);
  int recal_actions = 2;
  double recal_epsilon = 0.05;
  std::string recal_mode = "soft";
  std::uint64_t recal_seed = 0;
  int recal_max_steps = -1;
  std::string recal_model;
  std::string recal_trace;
  recal->add_option("--actions,-k", recal_actions, "Number of decision actions K");
  recal->add_option("--epsilon,-e", recal_epsilon, "Target tolerance");
  recal->add_option("--mode", recal_mode, "Layer type: soft or hard")
      ->check(CLI::IsMember({"soft", "hard"}));
  recal->add_option("--seed", recal_seed, "Search seed");
  recal->add_option("--max-steps", recal_max_steps, "Optional cap on layers (-1: theory cap)");
  recal->add_option("--model,-m", recal_model, "Write the trained model JSON here")->required();
  recal->add_option("--output,-o", recal_trace, "Write the training trace JSON here");

  // apply
  auto* apply = app.add_subcommand("apply", "Apply a trained model to predictions");
  InputOptions apply_input;
  add_input_options(apply, apply_input);
  std::string apply_model;
  std::string apply_output;
  apply->add_option("--model,-m", apply_model, "Trained model JSON")->required();
  apply->add_option("--output,-o", apply_output, "Recalibrated predictions CSV")->required();

  // loss-gap
  auto* gap = app.add_subcommand("loss-gap", "Simulated-vs-true loss gap for chosen losses");
  InputOptions gap_input;
  add_input_options(gap, gap_input);
  std::string gap_loss;
  int gap_random = 500;
  int gap_actions = 2;
  std::uint64_t gap_seed = 0;
  std::string gap_output;
  gap->add_option("--loss", gap_loss, "Loss matrix JSON file (overrides random losses)");
  gap->add_option("--random-losses", gap_random, "Number of random standard-normal losses");
  gap->add_option("--actions,-k", gap_actions, "Actions for random losses");
  gap->add_option("--seed", gap_seed, "Random loss seed");
  gap->add_option("--output,-o", gap_output, "Write the JSON report here (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset with known truth");
  int sim_classes = 3;
  std::int64_t sim_samples = 10000;
  double sim_alpha = 1.0;
  std::string sim_distortion = "identity";
  std::uint64_t sim_seed = 0;
  std::string sim_output;
  std::string sim_truth;
  sim->add_option("--classes,-c", sim_classes, "Number of classes C");
  sim->add_option("--samples,-n", sim_samples, "Number of samples N");
  sim->add_option("--alpha", sim_alpha, "Dirichlet concentration");
  sim->add_option("--distortion", sim_distortion, "identity, temperature:T or swap:C1,C2,RHO");
  sim->add_option("--seed", sim_seed, "Generator seed");
  sim->add_option("--output,-o", sim_output, "Dataset CSV path")->required();
  sim->add_option("--ground-truth", sim_truth, "Optional CSV of generating distributions");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Full recalibration experiment with reports");
  std::string exp_config;
  std::string exp_output;
  std::string exp_csv;
  std::string exp_model;
  decal::ExperimentConfig config;
  std::string exp_distortion;
  std::string exp_mode;
  std::string exp_input;
  std::string exp_format = "csv";
  bool exp_renormalize = false;
  bool exp_temp = false;
  int exp_max_steps = -1;
  exp->add_option("--config", exp_config, "Experiment config JSON file");
  auto* exp_seed_opt = exp->add_option("--seed", config.seed, "Master seed");
  auto* exp_actions_opt = exp->add_option("--actions,-k", config.num_actions, "Actions K");
  auto* exp_eps_opt = exp->add_option("--epsilon,-e", config.epsilon, "Tolerance");
  auto* exp_losses_opt = exp->add_option("--losses", config.num_random_losses, "Random losses");
  auto* exp_classes_opt = exp->add_option("--classes,-c", config.synthetic_classes, "Classes");
  auto* exp_samples_opt = exp->add_option("--samples,-n", config.synthetic_samples, "Samples");
  auto* exp_alpha_opt = exp->add_option("--alpha", config.synthetic_alpha, "Dirichlet alpha");
  exp->add_option("--distortion", exp_distortion, "Synthetic distortion spec");
  exp->add_option("--mode", exp_mode, "soft or hard")->check(CLI::IsMember({"soft", "hard"}));
  exp->add_option("--input,-i", exp_input, "Use this dataset instead of synthetic data");
  exp->add_option("--format", exp_format, "Input format")->check(CLI::IsMember({"csv", "json"}));
  exp->add_flag("--renormalize", exp_renormalize, "Renormalize off-simplex rows");
  exp->add_flag("--temperature-scaling", exp_temp, "Fit a temperature before recalibrating");
  exp->add_option("--max-steps", exp_max_steps, "Cap on recalibration layers");
  auto* exp_cal_opt = exp->add_option("--cal-fraction", config.calibration_fraction,
                                      "Calibration split fraction");
  auto* exp_test_opt = exp->add_option("--test-fraction", config.test_fraction,
                                       "Test split fraction");
  exp->add_option("--output,-o", exp_output, "Report JSON path (default stdout)");
  exp->add_option("--csv", exp_csv, "Optional per-step CSV table");
  exp->add_option("--model,-m", exp_model, "Optional trained model JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (verify->parsed()) {
      return run_verify(verify_input, verify_actions, verify_epsilon, verify_seed, verify_notion,
                        verify_output);
    }
    if (recal->parsed()) {
      return run_recalibrate(recal_input, recal_actions, recal_epsilon, recal_mode, recal_seed,
                             recal_max_steps >= 0 ? std::optional<int>(recal_max_steps)
                                                  : std::nullopt,
                             recal_model, recal_trace);
    }
    if (apply->parsed()) {
      return run_apply(apply_input, apply_model, apply_output);
    }
    if (gap->parsed()) {
      return run_loss_gap(gap_input, gap_loss, gap_random, gap_actions, gap_seed, gap_output);
    }
    if (sim->parsed()) {
      return run_simulate(sim_classes, sim_samples, sim_alpha, sim_distortion, sim_seed,
                          sim_output, sim_truth);
    }
    if (exp->parsed()) {
      if (!exp_config.empty()) {
        // Remember explicit flags, load the file, then re-apply overrides.
        const decal::ExperimentConfig overrides = config;
        config = decal::ExperimentConfig::from_json_string(decal::read_text_file(exp_config));
        if (exp_seed_opt->count()) config.seed = overrides.seed;
        if (exp_actions_opt->count()) config.num_actions = overrides.num_actions;
        if (exp_eps_opt->count()) config.epsilon = overrides.epsilon;
        if (exp_losses_opt->count()) config.num_random_losses = overrides.num_random_losses;
        if (exp_classes_opt->count()) config.synthetic_classes = overrides.synthetic_classes;
        if (exp_samples_opt->count()) config.synthetic_samples = overrides.synthetic_samples;
        if (exp_alpha_opt->count()) config.synthetic_alpha = overrides.synthetic_alpha;
        if (exp_cal_opt->count()) config.calibration_fraction = overrides.calibration_fraction;
        if (exp_test_opt->count()) config.test_fraction = overrides.test_fraction;
      }
      if (!exp_distortion.empty()) {
        config.synthetic_distortion = decal::DistortionSpec::parse(exp_distortion);
      }
      if (!exp_mode.empty()) {
        config.mode = exp_mode == "hard" ? decal::PartitionMode::hard
                                         : decal::PartitionMode::soft;
      }
      if (!exp_input.empty()) {
        config.input_path = exp_input;
        config.input_format = decal::dataset_format_from_name(exp_format);
      }
      if (exp_renormalize) config.renormalize = true;
      if (exp_temp) config.temperature_scaling = true;
      if (exp_max_steps >= 0) config.max_steps = exp_max_steps;
      return run_experiment_cmd(config, exp_output, exp_csv, exp_model);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
