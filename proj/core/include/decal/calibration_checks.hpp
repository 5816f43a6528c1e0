#pragma once

#include <string>
#include <vector>

#include "decal/partitions.hpp"
#include "decal/types.hpp"

namespace decal {

enum class CalibrationNotion { decision, confidence, classwise, distribution };

std::string notion_name(CalibrationNotion notion);

/// Per-group (or per-cell) diagnostic attached to a report.
struct ReportGroup {
  int class_index = -1;     // classwise checks only
  double level = 0.0;       // conditioning value (top probability, p_c, cell index)
  double mass = 0.0;        // normalized group weight
  double predicted = 0.0;   // mean predicted quantity in the group
  double observed = 0.0;    // empirical counterpart
  double discrepancy = 0.0;
};

struct CalibrationReport {
  CalibrationNotion notion = CalibrationNotion::decision;
  double gap = 0.0;
  double epsilon = 0.0;
  bool passed = false;
  std::vector<ReportGroup> details;

  std::string to_json_string(int indent = -1) const;
};

/// Grouping rule for the conditional-mean checks: condition on exact values
/// while the support is small, otherwise fall back to equal-mass bins.
struct BinningPolicy {
  int max_exact_distinct = 64;
  int num_bins = 15;
};

/// Worst-case partition gap (the decision-calibration certificate). Uses the
/// exact enumeration oracle whenever the instance is small enough for it,
/// otherwise the gradient-ascent search.
CalibrationReport decision_gap(const CalibrationDataset& dataset, int num_actions,
                               double epsilon, const SearchConfig& search);

/// Reliability of the top-class probability: groups samples by max
/// probability and averages |top-class accuracy - mean confidence|.
CalibrationReport confidence_gap(const CalibrationDataset& dataset, double epsilon,
                                 const BinningPolicy& binning = {});

/// Per-class marginal reliability; the gap is the worst class's weighted
/// average discrepancy.
CalibrationReport classwise_gap(const CalibrationDataset& dataset, double epsilon,
                                const BinningPolicy& binning = {});

/// Exact-conditioning distribution calibration on finite supports: groups by
/// the full prediction vector (coordinates rounded to 1e-9) and sums
/// weight * ||group label mean - q||_1. Refuses supports beyond max_groups.
CalibrationReport distribution_gap(const CalibrationDataset& dataset, double epsilon,
                                   std::int64_t max_groups = 1000000);

}  // namespace decal
