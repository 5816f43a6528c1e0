#include "decal/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "decal/decisions.hpp"
#include "decal/errors.hpp"
#include "decal/parallel.hpp"

namespace decal {
namespace {

using nlohmann::json;

double weighted_nll(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                    const Eigen::VectorXd& weights, double temperature) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::ArrayXd scaled = logits.row(i).transpose().array() / temperature;
    const double m = scaled.maxCoeff();
    const double logsum = m + std::log((scaled - m).exp().sum());
    acc += weights[i] * (logsum - scaled[labels[static_cast<std::size_t>(i)]]);
  }
  return acc / weights.sum();
}

}  // namespace

TemperatureScaleResult temperature_scale(const Eigen::MatrixXd& logits,
                                         const std::vector<int>& labels,
                                         const Eigen::VectorXd& weights,
                                         const TemperatureGrid& grid) {
  if (logits.rows() != static_cast<Eigen::Index>(labels.size()) ||
      logits.rows() != weights.size()) {
    throw invalid_input_error("temperature scaling: logits/labels/weights sizes disagree");
  }
  if (grid.points < 2 || !(grid.t_min > 0.0) || !(grid.t_max > grid.t_min)) {
    throw invalid_input_error("temperature grid is malformed");
  }
  const auto nll = [&](double t) { return weighted_nll(logits, labels, weights, t); };

  const double ratio = grid.t_max / grid.t_min;
  std::vector<double> ts(static_cast<std::size_t>(grid.points));
  for (int j = 0; j < grid.points; ++j) {
    ts[static_cast<std::size_t>(j)] =
        grid.t_min * std::pow(ratio, static_cast<double>(j) / (grid.points - 1));
  }
  // Improvements below rounding noise are ties; ties keep the earlier
  // point, so a flat objective deterministically yields the first grid value.
  const auto improves = [](double v, double incumbent) {
    return v < incumbent - 1e-12 * (1.0 + std::abs(incumbent));
  };
  int best = 0;
  double best_value = nll(ts[0]);
  for (int j = 1; j < grid.points; ++j) {
    const double v = nll(ts[static_cast<std::size_t>(j)]);
    if (improves(v, best_value)) {
      best_value = v;
      best = j;
    }
  }

  // Golden-section refinement between the grid neighbours; adopt the refined
  // point only on strict improvement.
  double lo = ts[static_cast<std::size_t>(std::max(0, best - 1))];
  double hi = ts[static_cast<std::size_t>(std::min(grid.points - 1, best + 1))];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = nll(c);
  double fd = nll(d);
  while (hi - lo > grid.refine_tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = nll(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = nll(d);
    }
  }
  const double refined = fc < fd ? c : d;
  const double refined_value = std::min(fc, fd);

  TemperatureScaleResult result;
  result.temperature =
      improves(refined_value, best_value) ? refined : ts[static_cast<std::size_t>(best)];
  result.probabilities = softmax_rows(logits / result.temperature);
  return result;
}

// ---------------------------------------------------------------------------
// Config serialization.

namespace {

std::string mode_name(PartitionMode mode) {
  return mode == PartitionMode::hard ? "hard" : "soft";
}

PartitionMode mode_from_name(const std::string& name) {
  if (name == "hard") return PartitionMode::hard;
  if (name == "soft") return PartitionMode::soft;
  throw invalid_input_error("mode must be 'hard' or 'soft', got '" + name + "'");
}

std::string termination_name(TerminationReason reason) {
  return reason == TerminationReason::tolerance_met ? "tolerance_met" : "max_iterations";
}

json split_metrics_to_json(const SplitMetrics& m) {
  json j;
  j["avg_loss_gap"] = m.avg_loss_gap;
  j["worst_loss_gap"] = m.worst_loss_gap;
  j["avg_decision_loss"] = m.avg_decision_loss;
  j["accuracy"] = m.accuracy;
  j["l2_error"] = m.l2_error;
  return j;
}

json notion_reports_to_json(const NotionReports& r) {
  json j;
  j["decision"] = json::parse(r.decision.to_json_string());
  j["confidence"] = json::parse(r.confidence.to_json_string());
  j["classwise"] = json::parse(r.classwise.to_json_string());
  j["distribution"] = json::parse(r.distribution.to_json_string());
  return j;
}

}  // namespace

std::string ExperimentConfig::to_json_string(int indent) const {
  json j;
  j["seed"] = seed;
  j["num_actions"] = num_actions;
  j["epsilon"] = epsilon;
  j["num_random_losses"] = num_random_losses;
  j["calibration_fraction"] = calibration_fraction;
  j["test_fraction"] = test_fraction;
  j["mode"] = mode_name(mode);
  j["temperature_scaling"] = temperature_scaling;
  if (max_steps) j["max_steps"] = *max_steps;
  j["search_restarts"] = search_restarts;
  j["search_steps"] = search_steps;
  j["search_step_size"] = search_step_size;
  if (input_path) {
    j["input_path"] = *input_path;
    j["input_format"] = input_format == DatasetFormat::csv ? "csv" : "json";
    j["renormalize"] = renormalize;
  } else {
    j["synthetic"] = {{"classes", synthetic_classes},
                      {"samples", synthetic_samples},
                      {"alpha", synthetic_alpha},
                      {"distortion", synthetic_distortion.to_string()}};
  }
  return j.dump(indent);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw invalid_input_error(std::string("experiment config parse error: ") + e.what());
  }
  ExperimentConfig config;
  try {
    config.seed = j.value("seed", std::uint64_t{0});
    config.num_actions = j.value("num_actions", 2);
    config.epsilon = j.value("epsilon", 0.05);
    config.num_random_losses = j.value("num_random_losses", 500);
    config.calibration_fraction = j.value("calibration_fraction", 0.6);
    config.test_fraction = j.value("test_fraction", 0.4);
    config.mode = mode_from_name(j.value("mode", std::string("soft")));
    config.temperature_scaling = j.value("temperature_scaling", false);
    if (j.contains("max_steps")) config.max_steps = j.at("max_steps").get<int>();
    config.search_restarts = j.value("search_restarts", 10);
    config.search_steps = j.value("search_steps", 300);
    config.search_step_size = j.value("search_step_size", 0.5);
    if (j.contains("input_path")) {
      config.input_path = j.at("input_path").get<std::string>();
      config.input_format = dataset_format_from_name(j.value("input_format", std::string("csv")));
      config.renormalize = j.value("renormalize", false);
    } else if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      config.synthetic_classes = s.value("classes", 3);
      config.synthetic_samples = s.value("samples", std::int64_t{10000});
      config.synthetic_alpha = s.value("alpha", 1.0);
      config.synthetic_distortion = DistortionSpec::parse(s.value("distortion", std::string("identity")));
    }
  } catch (const json::exception& e) {
    throw invalid_input_error(std::string("experiment config field error: ") + e.what());
  }
  return config;
}

std::string ExperimentReport::to_json_string(int indent) const {
  json j;
  j["config"] = json::parse(config.to_json_string());
  if (temperature) {
    j["temperature"] = *temperature;
  } else {
    j["temperature"] = nullptr;
  }
  j["termination_reason"] = termination_name(termination_reason);
  j["num_steps"] = steps.empty() ? 0 : steps.size() - 1;
  json step_array = json::array();
  for (std::size_t t = 0; t < steps.size(); ++t) {
    json item;
    item["step"] = t;
    item["calibration"] = split_metrics_to_json(steps[t].calibration);
    item["test"] = split_metrics_to_json(steps[t].test);
    step_array.push_back(std::move(item));
  }
  j["steps"] = std::move(step_array);
  json trace_json;
  trace_json["initial_l2"] = trace.initial_l2;
  trace_json["final_squared"] = trace.final_squared;
  trace_json["final_norm"] = trace.final_norm;
  json iters = json::array();
  for (const IterationRecord& r : trace.iterations) {
    iters.push_back({{"squared_value", r.squared_value},
                     {"norm_value", r.norm_value},
                     {"l2_error", r.l2_error}});
  }
  trace_json["iterations"] = std::move(iters);
  j["trace"] = std::move(trace_json);
  j["step0"] = {{"calibration", notion_reports_to_json(step0_calibration)},
                {"test", notion_reports_to_json(step0_test)}};
  j["final"] = {{"calibration", notion_reports_to_json(final_calibration)},
                {"test", notion_reports_to_json(final_test)}};
  return j.dump(indent);
}

std::string ExperimentReport::steps_csv() const {
  std::ostringstream out;
  out << "step,cal_avg_loss_gap,cal_worst_loss_gap,cal_avg_decision_loss,cal_accuracy,"
         "cal_l2_error,test_avg_loss_gap,test_worst_loss_gap,test_avg_decision_loss,"
         "test_accuracy,test_l2_error\n";
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const SplitMetrics& c = steps[t].calibration;
    const SplitMetrics& s = steps[t].test;
    out << t << ',' << format_double(c.avg_loss_gap) << ',' << format_double(c.worst_loss_gap)
        << ',' << format_double(c.avg_decision_loss) << ',' << format_double(c.accuracy) << ','
        << format_double(c.l2_error) << ',' << format_double(s.avg_loss_gap) << ','
        << format_double(s.worst_loss_gap) << ',' << format_double(s.avg_decision_loss) << ','
        << format_double(s.accuracy) << ',' << format_double(s.l2_error) << '\n';
  }
  return out.str();
}

SplitMetrics evaluate_split(const Eigen::MatrixXd& predictions, const std::vector<int>& labels,
                            const Eigen::VectorXd& weights,
                            const std::vector<LossMatrix>& losses) {
  const Eigen::Index n = predictions.rows();
  const double total = weights.sum();
  SplitMetrics metrics;

  // Loss gaps and decision losses, one pass per loss; parallel over losses
  // with index-ordered aggregation.
  std::vector<double> gaps(losses.size());
  std::vector<double> true_losses(losses.size());
  parallel_for_index(static_cast<std::int64_t>(losses.size()), [&](std::int64_t li) {
    const LossMatrix& loss = losses[static_cast<std::size_t>(li)];
    const Eigen::MatrixXd expected = predictions * loss.entries().transpose();  // n x K
    double simulated = 0.0;
    double realized = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int a = 0;
      for (int k = 1; k < expected.cols(); ++k) {
        if (expected(i, k) < expected(i, a)) a = k;
      }
      simulated += weights[i] * expected(i, a);
      realized += weights[i] * loss(a, labels[static_cast<std::size_t>(i)]);
    }
    simulated /= total;
    realized /= total;
    gaps[static_cast<std::size_t>(li)] = std::abs(simulated - realized) / loss.sup_norm();
    true_losses[static_cast<std::size_t>(li)] = realized;
  });
  for (std::size_t li = 0; li < losses.size(); ++li) {
    metrics.avg_loss_gap += gaps[li];
    metrics.worst_loss_gap = std::max(metrics.worst_loss_gap, gaps[li]);
    metrics.avg_decision_loss += true_losses[li];
  }
  if (!losses.empty()) {
    metrics.avg_loss_gap /= static_cast<double>(losses.size());
    metrics.avg_decision_loss /= static_cast<double>(losses.size());
  }

  double hits = 0.0;
  double l2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index top = 0;
    predictions.row(i).maxCoeff(&top);
    const int label = labels[static_cast<std::size_t>(i)];
    if (static_cast<int>(top) == label) hits += weights[i];
    double sq = predictions.row(i).squaredNorm() + 1.0 - 2.0 * predictions(i, label);
    l2 += weights[i] * sq;
  }
  metrics.accuracy = hits / total;
  metrics.l2_error = l2 / total;
  return metrics;
}

namespace {

NotionReports all_notions(const CalibrationDataset& dataset, int num_actions, double epsilon,
                          const SearchConfig& search) {
  NotionReports reports;
  reports.decision = decision_gap(dataset, num_actions, epsilon, search);
  reports.confidence = confidence_gap(dataset, epsilon);
  reports.classwise = classwise_gap(dataset, epsilon);
  reports.distribution = distribution_gap(dataset, epsilon);
  return reports;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  if (!(config.calibration_fraction > 0.0) || !(config.test_fraction > 0.0) ||
      config.calibration_fraction + config.test_fraction > 1.0 + 1e-12) {
    throw invalid_input_error("split fractions must be positive and sum to at most 1");
  }
  if (config.num_random_losses < 1) {
    throw invalid_input_error("experiment needs at least one random loss");
  }

  // 1. Data.
  std::optional<Eigen::MatrixXd> logits;
  std::optional<CalibrationDataset> full;
  if (config.input_path) {
    LoadedDataset loaded =
        load_dataset(*config.input_path, config.input_format, config.renormalize);
    logits = std::move(loaded.logits);
    full = std::move(loaded.dataset);
  } else {
    SyntheticData data =
        generate_synthetic(config.synthetic_classes, config.synthetic_samples,
                           config.synthetic_alpha, config.synthetic_distortion,
                           derive_seed(config.seed, 0xda7aULL));
    full = std::move(data.dataset);
  }
  const int C = full->num_classes();

  // 2. Optional temperature scaling; predictions without explicit logits are
  // rescaled through their logs.
  std::optional<double> temperature;
  if (config.temperature_scaling) {
    Eigen::MatrixXd source_logits =
        logits ? *logits : full->predictions().array().max(1e-300).log().matrix();
    TemperatureScaleResult scaled =
        temperature_scale(source_logits, full->labels(), full->weights());
    temperature = scaled.temperature;
    full = full->with_predictions(std::move(scaled.probabilities));
  }

  // 3. Disjoint seeded split.
  const std::int64_t n = full->size();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::mt19937_64 split_rng(derive_seed(config.seed, 0x5eedULL));
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::int64_t n_cal = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(config.calibration_fraction * n)));
  const std::int64_t n_test = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(config.test_fraction * n)));
  if (n_cal + n_test > n) {
    throw invalid_input_error("dataset too small for the requested splits");
  }
  auto take = [&](std::int64_t begin, std::int64_t count) {
    Eigen::MatrixXd preds(count, C);
    std::vector<int> labels(static_cast<std::size_t>(count));
    Eigen::VectorXd weights(count);
    for (std::int64_t i = 0; i < count; ++i) {
      const std::int64_t src = order[static_cast<std::size_t>(begin + i)];
      preds.row(i) = full->predictions().row(src);
      labels[static_cast<std::size_t>(i)] = full->label(src);
      weights[i] = full->weight(src);
    }
    return CalibrationDataset(std::move(preds), std::move(labels), std::move(weights));
  };
  CalibrationDataset calibration = take(0, n_cal);
  CalibrationDataset test = take(n_cal, n_test);

  // 4. Random losses.
  const std::vector<LossMatrix> losses = sample_random_losses(
      config.num_actions, C, config.num_random_losses, derive_seed(config.seed, 0x10555ULL));

  // 5. Recalibrate on the calibration split only.
  RecalibrateOptions options;
  options.num_actions = config.num_actions;
  options.epsilon = config.epsilon;
  options.mode = config.mode;
  options.max_layers = config.max_steps;
  options.search.restarts = config.search_restarts;
  options.search.steps = config.search_steps;
  options.search.step_size = config.search_step_size;
  options.search.seed = derive_seed(config.seed, 0x5ea7c4ULL);
  auto [model, trace] = recalibrate(calibration, options);

  // 6. Per-step metrics on both splits, replaying the trained layers.
  ExperimentReport report;
  report.config = config;
  report.temperature = temperature;
  report.termination_reason = trace.termination_reason;
  report.trace = trace;

  Eigen::MatrixXd cal_preds = calibration.predictions();
  Eigen::MatrixXd test_preds = test.predictions();
  const std::size_t layer_count = model.layers().size();
  for (std::size_t t = 0; t <= layer_count; ++t) {
    if (t > 0) {
      const Layer& layer = model.layers()[t - 1];
      for (Eigen::Index i = 0; i < cal_preds.rows(); ++i) {
        cal_preds.row(i) = layer.apply_raw(cal_preds.row(i).transpose()).transpose();
      }
      for (Eigen::Index i = 0; i < test_preds.rows(); ++i) {
        test_preds.row(i) = layer.apply_raw(test_preds.row(i).transpose()).transpose();
      }
    }
    StepMetrics step;
    step.calibration = evaluate_split(cal_preds, calibration.labels(), calibration.weights(), losses);
    step.test = evaluate_split(test_preds, test.labels(), test.weights(), losses);
    report.steps.push_back(step);
  }

  // 7. Calibration reports before and after, on both splits.
  SearchConfig verify_search = options.search;
  verify_search.seed = derive_seed(config.seed, 0xc4ec4ULL);
  report.step0_calibration =
      all_notions(calibration, config.num_actions, config.epsilon, verify_search);
  report.step0_test = all_notions(test, config.num_actions, config.epsilon, verify_search);
  CalibrationDataset cal_final = calibration.with_predictions(cal_preds);
  CalibrationDataset test_final = test.with_predictions(test_preds);
  report.final_calibration =
      all_notions(cal_final, config.num_actions, config.epsilon, verify_search);
  report.final_test = all_notions(test_final, config.num_actions, config.epsilon, verify_search);

  return ExperimentOutput{std::move(report), std::move(model), std::move(calibration),
                          std::move(test)};
}

}  // namespace decal
