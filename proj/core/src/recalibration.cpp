#include "decal/recalibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <json.hpp>

#include "decal/decisions.hpp"
#include "decal/errors.hpp"
#include "decal/numeric.hpp"

namespace decal {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw invalid_input_error(std::string(what) + ": expected an array of rows");
  }
  const Eigen::Index R = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index C = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(R, C);
  for (Eigen::Index r = 0; r < R; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != C) {
      throw invalid_input_error(std::string(what) + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < C; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

}  // namespace

Layer::Layer(PartitionWeights partition, Eigen::MatrixXd shifts)
    : partition_(std::move(partition)), shifts_(std::move(shifts)) {
  const int K = partition_.num_cells();
  const int C = partition_.num_classes();
  const bool hard = partition_.mode() == PartitionMode::hard;
  const Eigen::Index want_rows = hard ? K : C;
  const Eigen::Index want_cols = hard ? C : K;
  if (shifts_.rows() != want_rows || shifts_.cols() != want_cols) {
    throw invalid_input_error("layer shift matrix has the wrong shape");
  }
  if (!shifts_.allFinite()) throw invalid_input_error("layer shifts are non-finite");
}

Eigen::VectorXd Layer::apply_raw(const Eigen::VectorXd& q) const {
  if (q.size() != partition_.num_classes()) {
    throw invalid_input_error("layer expects " + std::to_string(partition_.num_classes()) +
                              " classes, got " + std::to_string(q.size()));
  }
  Eigen::VectorXd adjusted;
  if (partition_.mode() == PartitionMode::hard) {
    adjusted = q + shifts_.row(partition_.hard_cell(q)).transpose();
  } else {
    adjusted = q + shifts_ * partition_.memberships(q);
  }
  return project_to_simplex_raw(adjusted);
}

void RecalibrationModel::push_layer(Layer layer) {
  if (layer.partition().num_classes() != num_classes_) {
    throw invalid_input_error("layer class count does not match model");
  }
  layers_.push_back(std::move(layer));
}

ProbabilityVector RecalibrationModel::apply(const ProbabilityVector& q) const {
  return ProbabilityVector(apply_raw(q.values()));
}

Eigen::VectorXd RecalibrationModel::apply_raw(Eigen::VectorXd q) const {
  return apply_prefix_raw(std::move(q), layers_.size());
}

Eigen::VectorXd RecalibrationModel::apply_prefix_raw(Eigen::VectorXd q, std::size_t count) const {
  if (count > layers_.size()) {
    throw invalid_input_error("prefix length exceeds layer count");
  }
  for (std::size_t t = 0; t < count; ++t) q = layers_[t].apply_raw(q);
  return q;
}

std::string RecalibrationModel::to_json_string(int indent) const {
  json doc;
  doc["num_classes"] = num_classes_;
  doc["num_actions"] = num_actions_;
  doc["tolerance"] = tolerance_;
  json layers = json::array();
  for (const Layer& layer : layers_) {
    json item;
    item["mode"] = layer.partition().mode() == PartitionMode::hard ? "hard" : "soft";
    item["w"] = matrix_to_json(layer.partition().w());
    item["shifts_or_U"] = matrix_to_json(layer.shifts());
    layers.push_back(std::move(item));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(indent);
}

RecalibrationModel RecalibrationModel::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw invalid_input_error(std::string("model JSON parse error: ") + e.what());
  }
  try {
    RecalibrationModel model(doc.at("num_classes").get<int>(), doc.at("num_actions").get<int>(),
                             doc.at("tolerance").get<double>());
    for (const json& item : doc.at("layers")) {
      const std::string mode_name = item.at("mode").get<std::string>();
      if (mode_name != "hard" && mode_name != "soft") {
        throw invalid_input_error("model layer mode must be 'hard' or 'soft'");
      }
      const PartitionMode mode =
          mode_name == "hard" ? PartitionMode::hard : PartitionMode::soft;
      PartitionWeights partition(mode, matrix_from_json(item.at("w"), "layer w"));
      model.push_layer(Layer(std::move(partition),
                             matrix_from_json(item.at("shifts_or_U"), "layer shifts")));
    }
    return model;
  } catch (const json::exception& e) {
    throw invalid_input_error(std::string("model JSON is missing fields: ") + e.what());
  }
}

namespace {

Layer build_hard_layer(const PartitionWeights& partition, const PartitionObjective& objective) {
  // d_a = E[(Y - p) b_a] / E[b_a]; empty cells get no shift.
  Eigen::MatrixXd shifts = Eigen::MatrixXd::Zero(partition.num_cells(), partition.num_classes());
  for (int a = 0; a < partition.num_cells(); ++a) {
    if (objective.per_cell_mass[a] > 0.0) {
      shifts.row(a) = -objective.per_cell_vectors.row(a) / objective.per_cell_mass[a];
    }
  }
  return Layer(partition.as_hard(), std::move(shifts));
}

Layer build_soft_layer(const CalibrationDataset& dataset, const PartitionWeights& soft_partition,
                       const PartitionObjective& soft_objective) {
  const Eigen::MatrixXd b =
      softmax_rows(dataset.predictions() * soft_partition.w().transpose());
  const Eigen::MatrixXd d =
      b.transpose() * (dataset.weights().asDiagonal() * b) / dataset.total_weight();
  const Eigen::MatrixXd r = -soft_objective.per_cell_vectors;  // E[(Y - p) b_a]
  const Eigen::MatrixXd u = r.transpose() * pseudo_inverse(d);
  return Layer(soft_partition, u);
}

Eigen::MatrixXd apply_layer_to_matrix(const Layer& layer, const Eigen::MatrixXd& predictions) {
  Eigen::MatrixXd out(predictions.rows(), predictions.cols());
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    out.row(i) = layer.apply_raw(predictions.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace

std::pair<RecalibrationModel, TrainTrace> recalibrate(const CalibrationDataset& dataset,
                                                      const RecalibrateOptions& options) {
  if (!(options.epsilon > 0.0 && options.epsilon < 1.0)) {
    throw invalid_input_error("epsilon must lie strictly inside (0, 1)");
  }
  if (options.num_actions < 1) throw invalid_input_error("need at least one action");

  const int K = options.num_actions;
  const double threshold = options.epsilon * options.epsilon / static_cast<double>(K);
  int cap = static_cast<int>(
      std::ceil(8.0 * static_cast<double>(K) / (options.epsilon * options.epsilon)));
  if (options.max_layers && *options.max_layers >= 0) cap = std::min(cap, *options.max_layers);

  RecalibrationModel model(dataset.num_classes(), K, options.epsilon);
  TrainTrace trace;
  trace.initial_l2 = dataset.l2_error();

  CalibrationDataset current = dataset;
  for (;;) {
    auto [partition, certified] = find_worst_partition(current, K, options.search);
    if (certified.squared_value < threshold) {
      trace.termination_reason = TerminationReason::tolerance_met;
      trace.final_squared = certified.squared_value;
      trace.final_norm = certified.norm_value;
      break;
    }
    if (static_cast<int>(model.layers().size()) >= cap) {
      trace.termination_reason = TerminationReason::max_iterations;
      trace.final_squared = certified.squared_value;
      trace.final_norm = certified.norm_value;
      break;
    }

    Layer layer = build_hard_layer(partition, certified);
    if (options.mode == PartitionMode::soft) {
      // The soft update is used whenever it explains at least as much of the
      // certified violation as the hard snap; otherwise the hard cell-mean
      // update keeps the potential argument intact.
      const PartitionWeights soft_partition = partition.as_soft();
      const PartitionObjective soft_objective = evaluate_objective(current, soft_partition);
      if (soft_objective.squared_value >= certified.squared_value) {
        layer = build_soft_layer(current, soft_partition, soft_objective);
      }
    }

    current = current.with_predictions(apply_layer_to_matrix(layer, current.predictions()));
    IterationRecord record;
    record.squared_value = certified.squared_value;
    record.norm_value = certified.norm_value;
    record.l2_error = current.l2_error();
    trace.iterations.push_back(record);
    model.push_layer(std::move(layer));
  }
  return {std::move(model), std::move(trace)};
}

LossCompression::LossCompression(LossMatrix loss,
                                 std::vector<std::optional<ProbabilityVector>> cell_means)
    : loss_(std::move(loss)), cell_means_(std::move(cell_means)) {
  if (static_cast<int>(cell_means_.size()) != loss_.num_actions()) {
    throw invalid_input_error("compression needs one (possibly empty) mean per action");
  }
}

ProbabilityVector LossCompression::compress(const ProbabilityVector& q) const {
  const int action = bayes_decide(loss_, q);
  const auto& mean = cell_means_[static_cast<std::size_t>(action)];
  return mean ? *mean : q;
}

CalibrationDataset LossCompression::compress_dataset(const CalibrationDataset& dataset) const {
  Eigen::MatrixXd compressed(dataset.size(), dataset.num_classes());
  const DecisionRule rule(loss_);
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd q = dataset.predictions().row(i).transpose();
    const auto& mean = cell_means_[static_cast<std::size_t>(rule.decide_raw(q))];
    compressed.row(i) = mean ? mean->values().transpose() : q.transpose();
  }
  return dataset.with_predictions(std::move(compressed));
}

LossCompression compress_for_loss(const CalibrationDataset& dataset, const LossMatrix& loss) {
  if (loss.num_classes() != dataset.num_classes()) {
    throw invalid_input_error("loss class count does not match dataset");
  }
  const int K = loss.num_actions();
  const DecisionRule rule(loss);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, dataset.num_classes());
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(K);
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd q = dataset.predictions().row(i).transpose();
    const int a = rule.decide_raw(q);
    sums.row(a) += dataset.weight(i) * q.transpose();
    mass[a] += dataset.weight(i);
  }
  std::vector<std::optional<ProbabilityVector>> means(static_cast<std::size_t>(K));
  for (int a = 0; a < K; ++a) {
    if (mass[a] > 0.0) {
      means[static_cast<std::size_t>(a)] = ProbabilityVector(sums.row(a).transpose() / mass[a]);
    }
  }
  return LossCompression(loss, std::move(means));
}

}  // namespace decal
