#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decal/types.hpp"

namespace decal {

enum class DatasetFormat { csv, json };

DatasetFormat dataset_format_from_name(const std::string& name);

/// A parsed dataset; logits are retained when the source provided them
/// (an `l0,l1,...` header or a "logits" JSON field) so temperature scaling
/// can run on the original scores.
struct LoadedDataset {
  CalibrationDataset dataset;
  std::optional<Eigen::MatrixXd> logits;
};

/// Reads `p0,...,p{C-1},label[,weight]` CSV rows (or the logit variant with
/// `l` prefixes, converted through a softmax), or the columnar JSON layout
/// {"num_classes", "predictions"|"logits", "labels", "weights"?}. Formatting
/// problems raise invalid_input_error naming the offending line. Probability
/// rows more than 1e-6 off the simplex are errors unless `renormalize`.
LoadedDataset load_dataset(const std::string& path, DatasetFormat format,
                           bool renormalize = false);

/// Prediction rows without labels (the `apply` input). Label and weight
/// columns are accepted and passed through when present.
struct LoadedPredictions {
  Eigen::MatrixXd predictions;
  std::optional<std::vector<int>> labels;
  std::optional<Eigen::VectorXd> weights;
};

LoadedPredictions load_predictions(const std::string& path, DatasetFormat format,
                                   bool renormalize = false);

void save_dataset_csv(const std::string& path, const CalibrationDataset& dataset);

void save_predictions_csv(const std::string& path, const Eigen::MatrixXd& predictions,
                          const std::optional<std::vector<int>>& labels = std::nullopt,
                          const std::optional<Eigen::VectorXd>& weights = std::nullopt);

/// Matrix CSV without header conventions (used for simulator ground truth).
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix,
                     const std::string& header);

/// Loss matrices interchange as {"entries": [[...]], "num_actions", "num_classes"}.
LossMatrix loss_matrix_from_json_string(const std::string& text);
std::string loss_matrix_to_json_string(const LossMatrix& loss, int indent = -1);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Shortest text form of a double that parses back to the same bits.
std::string format_double(double value);

}  // namespace decal
