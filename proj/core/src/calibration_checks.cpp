#include "decal/calibration_checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "decal/errors.hpp"

namespace decal {

std::string notion_name(CalibrationNotion notion) {
  switch (notion) {
    case CalibrationNotion::decision: return "decision";
    case CalibrationNotion::confidence: return "confidence";
    case CalibrationNotion::classwise: return "classwise";
    case CalibrationNotion::distribution: return "distribution";
  }
  return "unknown";
}

std::string CalibrationReport::to_json_string(int indent) const {
  nlohmann::json doc;
  doc["notion"] = notion_name(notion);
  doc["gap"] = gap;
  doc["epsilon"] = epsilon;
  doc["passed"] = passed;
  nlohmann::json groups = nlohmann::json::array();
  for (const ReportGroup& g : details) {
    nlohmann::json item;
    if (g.class_index >= 0) item["class"] = g.class_index;
    item["level"] = g.level;
    item["mass"] = g.mass;
    item["predicted"] = g.predicted;
    item["observed"] = g.observed;
    item["discrepancy"] = g.discrepancy;
    groups.push_back(std::move(item));
  }
  doc["details"] = std::move(groups);
  return doc.dump(indent);
}

namespace {

CalibrationReport make_report(CalibrationNotion notion, double gap, double epsilon,
                              std::vector<ReportGroup> details) {
  CalibrationReport report;
  report.notion = notion;
  report.gap = gap;
  report.epsilon = epsilon;
  report.passed = gap <= epsilon;
  report.details = std::move(details);
  return report;
}

// One conditioning group for the scalar reliability checks: samples indexed
// into the dataset, with their (value, observation) pairs already extracted.
struct ScalarGroup {
  double mass = 0.0;
  double value_sum = 0.0;     // weighted predicted value
  double observed_sum = 0.0;  // weighted observed indicator
};

// Groups (value, observed, weight) triples by exact value when the number of
// distinct values is small, otherwise by equal-mass bins over the sorted
// values.
std::vector<ScalarGroup> group_scalar(const std::vector<double>& values,
                                      const std::vector<double>& observed,
                                      const Eigen::VectorXd& weights,
                                      const BinningPolicy& binning) {
  const std::size_t n = values.size();
  std::map<double, std::size_t> distinct;
  for (double v : values) {
    distinct.try_emplace(v, distinct.size());
    if (static_cast<int>(distinct.size()) > binning.max_exact_distinct) break;
  }

  std::vector<ScalarGroup> groups;
  if (static_cast<int>(distinct.size()) <= binning.max_exact_distinct) {
    groups.resize(distinct.size());
    for (std::size_t i = 0; i < n; ++i) {
      ScalarGroup& g = groups[distinct.at(values[i])];
      const double w = weights[static_cast<Eigen::Index>(i)];
      g.mass += w;
      g.value_sum += w * values[i];
      g.observed_sum += w * observed[i];
    }
    return groups;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = weights.sum();
  const double per_bin = total / binning.num_bins;
  groups.resize(static_cast<std::size_t>(binning.num_bins));
  double seen = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    const double w = weights[static_cast<Eigen::Index>(i)];
    int bin = static_cast<int>(seen / per_bin);
    bin = std::min(bin, binning.num_bins - 1);
    seen += w;
    ScalarGroup& g = groups[static_cast<std::size_t>(bin)];
    g.mass += w;
    g.value_sum += w * values[i];
    g.observed_sum += w * observed[i];
  }
  return groups;
}

}  // namespace

CalibrationReport decision_gap(const CalibrationDataset& dataset, int num_actions,
                               double epsilon, const SearchConfig& search) {
  if (num_actions < 1) throw invalid_input_error("decision gap needs at least one action");
  PartitionObjective objective;
  if (oracle_supports(dataset, num_actions)) {
    objective = oracle_worst_partition(dataset, num_actions);
  } else {
    objective = find_worst_partition(dataset, num_actions, search).second;
  }
  std::vector<ReportGroup> details;
  for (int a = 0; a < objective.per_cell_mass.size(); ++a) {
    ReportGroup g;
    g.level = a;
    g.mass = objective.per_cell_mass[a];
    g.discrepancy = objective.per_cell_vectors.row(a).norm();
    details.push_back(g);
  }
  return make_report(CalibrationNotion::decision, objective.norm_value, epsilon,
                     std::move(details));
}

CalibrationReport confidence_gap(const CalibrationDataset& dataset, double epsilon,
                                 const BinningPolicy& binning) {
  const std::size_t n = static_cast<std::size_t>(dataset.size());
  std::vector<double> confidence(n);
  std::vector<double> correct(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Index top = 0;
    const double max_p = dataset.predictions().row(static_cast<Eigen::Index>(i)).maxCoeff(&top);
    confidence[i] = max_p;
    correct[i] = static_cast<int>(top) == dataset.label(static_cast<Eigen::Index>(i)) ? 1.0 : 0.0;
  }
  const auto groups = group_scalar(confidence, correct, dataset.weights(), binning);

  double gap = 0.0;
  std::vector<ReportGroup> details;
  for (const ScalarGroup& g : groups) {
    if (g.mass <= 0.0) continue;
    const double mean_conf = g.value_sum / g.mass;
    const double accuracy = g.observed_sum / g.mass;
    const double share = g.mass / dataset.total_weight();
    gap += share * std::abs(accuracy - mean_conf);
    ReportGroup d;
    d.level = mean_conf;
    d.mass = share;
    d.predicted = mean_conf;
    d.observed = accuracy;
    d.discrepancy = std::abs(accuracy - mean_conf);
    details.push_back(d);
  }
  return make_report(CalibrationNotion::confidence, gap, epsilon, std::move(details));
}

CalibrationReport classwise_gap(const CalibrationDataset& dataset, double epsilon,
                                const BinningPolicy& binning) {
  const std::size_t n = static_cast<std::size_t>(dataset.size());
  double gap = 0.0;
  std::vector<ReportGroup> details;
  for (int c = 0; c < dataset.num_classes(); ++c) {
    std::vector<double> prob(n);
    std::vector<double> hit(n);
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = dataset.predictions()(static_cast<Eigen::Index>(i), c);
      hit[i] = dataset.label(static_cast<Eigen::Index>(i)) == c ? 1.0 : 0.0;
    }
    const auto groups = group_scalar(prob, hit, dataset.weights(), binning);
    double class_gap = 0.0;
    for (const ScalarGroup& g : groups) {
      if (g.mass <= 0.0) continue;
      const double mean_prob = g.value_sum / g.mass;
      const double frequency = g.observed_sum / g.mass;
      const double share = g.mass / dataset.total_weight();
      class_gap += share * std::abs(frequency - mean_prob);
      ReportGroup d;
      d.class_index = c;
      d.level = mean_prob;
      d.mass = share;
      d.predicted = mean_prob;
      d.observed = frequency;
      d.discrepancy = std::abs(frequency - mean_prob);
      details.push_back(d);
    }
    gap = std::max(gap, class_gap);
  }
  return make_report(CalibrationNotion::classwise, gap, epsilon, std::move(details));
}

CalibrationReport distribution_gap(const CalibrationDataset& dataset, double epsilon,
                                   std::int64_t max_groups) {
  const int C = dataset.num_classes();
  struct VectorGroup {
    Eigen::VectorXd point;
    Eigen::VectorXd label_sum;
    double mass = 0.0;
  };
  std::map<std::vector<std::int64_t>, VectorGroup> groups;
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    std::vector<std::int64_t> key(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      key[static_cast<std::size_t>(c)] = std::llround(dataset.predictions()(i, c) * 1e9);
    }
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      if (static_cast<std::int64_t>(groups.size()) > max_groups) {
        throw unsupported_instance_error(
            "distribution check refuses supports beyond " + std::to_string(max_groups) +
            " distinct predictions");
      }
      it->second.point = dataset.predictions().row(i).transpose();
      it->second.label_sum = Eigen::VectorXd::Zero(C);
    }
    it->second.label_sum[dataset.label(i)] += dataset.weight(i);
    it->second.mass += dataset.weight(i);
  }

  double gap = 0.0;
  std::vector<ReportGroup> details;
  for (const auto& [key, g] : groups) {
    const Eigen::VectorXd mean = g.label_sum / g.mass;
    const double share = g.mass / dataset.total_weight();
    const double l1 = (mean - g.point).lpNorm<1>();
    gap += share * l1;
    ReportGroup d;
    d.level = g.point[0];
    d.mass = share;
    d.discrepancy = l1;
    details.push_back(d);
  }
  return make_report(CalibrationNotion::distribution, gap, epsilon, std::move(details));
}

}  // namespace decal
