#include "decal/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "decal/errors.hpp"

namespace decal {
namespace {

using nlohmann::json;

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view field, std::size_t line_no, const char* what) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw invalid_input_error("line " + std::to_string(line_no) + ": cannot parse " + what +
                              " from '" + std::string(field) + "'");
  }
  return value;
}

int parse_int(std::string_view field, std::size_t line_no, const char* what) {
  field = trim(field);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw invalid_input_error("line " + std::to_string(line_no) + ": cannot parse " + what +
                              " from '" + std::string(field) + "'");
  }
  return value;
}

struct CsvHeader {
  int num_classes = 0;
  bool logits = false;
  bool has_label = false;
  bool has_weight = false;
};

CsvHeader parse_header(std::string_view line) {
  const auto fields = split_csv_line(line);
  CsvHeader header;
  std::size_t i = 0;
  char prefix = 0;
  for (; i < fields.size(); ++i) {
    const std::string_view f = trim(fields[i]);
    if (f.size() < 2 || (f[0] != 'p' && f[0] != 'l')) break;
    if (prefix == 0) prefix = f[0];
    if (f[0] != prefix || f.substr(1) != std::to_string(i)) break;
    ++header.num_classes;
  }
  header.logits = prefix == 'l';
  if (header.num_classes < 2) {
    throw invalid_input_error(
        "line 1: header must start with p0,p1,... or l0,l1,... columns (at least 2 classes)");
  }
  if (i < fields.size() && trim(fields[i]) == "label") {
    header.has_label = true;
    ++i;
  }
  if (i < fields.size() && trim(fields[i]) == "weight") {
    header.has_weight = true;
    ++i;
  }
  if (i != fields.size()) {
    throw invalid_input_error("line 1: unexpected trailing header column '" +
                              std::string(fields[i]) + "'");
  }
  return header;
}

struct ParsedCsv {
  CsvHeader header;
  Eigen::MatrixXd values;  // probabilities or logits, one row per sample
  std::vector<int> labels;
  Eigen::VectorXd weights;
};

ParsedCsv parse_csv(const std::string& text, bool require_label) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }
  if (lines.empty()) throw invalid_input_error("line 1: file is empty");

  ParsedCsv out;
  out.header = parse_header(lines[0]);
  if (require_label && !out.header.has_label) {
    throw invalid_input_error("line 1: a 'label' column is required");
  }
  const std::size_t rows = lines.size() - 1;
  if (rows == 0) throw invalid_input_error("line 2: no data rows");
  out.values.resize(static_cast<Eigen::Index>(rows), out.header.num_classes);
  out.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rows));
  if (out.header.has_label) out.labels.resize(rows);

  const std::size_t want =
      static_cast<std::size_t>(out.header.num_classes) + (out.header.has_label ? 1 : 0) +
      (out.header.has_weight ? 1 : 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = r + 2;
    const auto fields = split_csv_line(lines[r + 1]);
    if (fields.size() != want) {
      throw invalid_input_error("line " + std::to_string(line_no) + ": expected " +
                                std::to_string(want) + " fields, found " +
                                std::to_string(fields.size()));
    }
    for (int c = 0; c < out.header.num_classes; ++c) {
      out.values(static_cast<Eigen::Index>(r), c) =
          parse_double(fields[static_cast<std::size_t>(c)], line_no, "probability/logit");
    }
    std::size_t next = static_cast<std::size_t>(out.header.num_classes);
    if (out.header.has_label) {
      out.labels[r] = parse_int(fields[next++], line_no, "label");
    }
    if (out.header.has_weight) {
      out.weights[static_cast<Eigen::Index>(r)] = parse_double(fields[next], line_no, "weight");
    }
  }
  return out;
}

// Turns raw probability rows into simplex rows, enforcing the 1e-6 contract
// or renormalizing on request. Line numbers refer to the CSV layout.
void validate_probability_rows(Eigen::MatrixXd& values, bool renormalize) {
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!(values(r, c) >= 0.0)) {
        throw invalid_input_error("line " + std::to_string(line_no) +
                                  ": negative or non-finite probability");
      }
    }
    const double sum = values.row(r).sum();
    if (!renormalize && std::abs(sum - 1.0) > ProbabilityVector::kSumTolerance) {
      throw invalid_input_error("line " + std::to_string(line_no) + ": probabilities sum to " +
                                std::to_string(sum) + "; pass --renormalize to accept");
    }
    if (sum <= 0.0) {
      throw invalid_input_error("line " + std::to_string(line_no) +
                                ": probabilities sum to zero");
    }
    values.row(r) /= sum;
  }
}

ParsedCsv parse_json_dataset(const std::string& text, bool require_label) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw invalid_input_error(std::string("dataset JSON parse error: ") + e.what());
  }
  ParsedCsv out;
  try {
    const bool logits = doc.contains("logits");
    const json& rows = logits ? doc.at("logits") : doc.at("predictions");
    out.header.logits = logits;
    out.header.num_classes = doc.at("num_classes").get<int>();
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw invalid_input_error("dataset JSON has no rows");
    out.values.resize(n, out.header.num_classes);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != out.header.num_classes) {
        throw invalid_input_error("dataset JSON row " + std::to_string(r) +
                                  " length does not match num_classes");
      }
      for (int c = 0; c < out.header.num_classes; ++c) {
        out.values(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    if (doc.contains("labels")) {
      out.header.has_label = true;
      out.labels = doc.at("labels").get<std::vector<int>>();
      if (static_cast<Eigen::Index>(out.labels.size()) != n) {
        throw invalid_input_error("dataset JSON labels length mismatch");
      }
    } else if (require_label) {
      throw invalid_input_error("dataset JSON needs a 'labels' array");
    }
    out.weights = Eigen::VectorXd::Ones(n);
    if (doc.contains("weights")) {
      out.header.has_weight = true;
      const auto w = doc.at("weights").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != n) {
        throw invalid_input_error("dataset JSON weights length mismatch");
      }
      out.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    }
  } catch (const json::exception& e) {
    throw invalid_input_error(std::string("dataset JSON is missing fields: ") + e.what());
  }
  return out;
}

}  // namespace

DatasetFormat dataset_format_from_name(const std::string& name) {
  if (name == "csv") return DatasetFormat::csv;
  if (name == "json") return DatasetFormat::json;
  throw invalid_input_error("unknown dataset format '" + name + "' (expected csv or json)");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input_error("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw invalid_input_error("failed writing '" + path + "'");
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

LoadedDataset load_dataset(const std::string& path, DatasetFormat format, bool renormalize) {
  const std::string text = read_text_file(path);
  ParsedCsv parsed = format == DatasetFormat::csv ? parse_csv(text, /*require_label=*/true)
                                                  : parse_json_dataset(text, true);
  std::optional<Eigen::MatrixXd> logits;
  Eigen::MatrixXd probabilities;
  if (parsed.header.logits) {
    logits = parsed.values;
    probabilities = softmax_rows(parsed.values);
  } else {
    probabilities = std::move(parsed.values);
    validate_probability_rows(probabilities, renormalize);
  }
  CalibrationDataset dataset(std::move(probabilities), std::move(parsed.labels),
                             std::move(parsed.weights));
  return LoadedDataset{std::move(dataset), std::move(logits)};
}

LoadedPredictions load_predictions(const std::string& path, DatasetFormat format,
                                   bool renormalize) {
  const std::string text = read_text_file(path);
  ParsedCsv parsed = format == DatasetFormat::csv ? parse_csv(text, /*require_label=*/false)
                                                  : parse_json_dataset(text, false);
  LoadedPredictions out;
  if (parsed.header.logits) {
    out.predictions = softmax_rows(parsed.values);
  } else {
    out.predictions = std::move(parsed.values);
    validate_probability_rows(out.predictions, renormalize);
  }
  if (parsed.header.has_label) out.labels = std::move(parsed.labels);
  if (parsed.header.has_weight) out.weights = std::move(parsed.weights);
  return out;
}

void save_dataset_csv(const std::string& path, const CalibrationDataset& dataset) {
  std::ostringstream out;
  for (int c = 0; c < dataset.num_classes(); ++c) out << 'p' << c << ',';
  out << "label,weight\n";
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    for (int c = 0; c < dataset.num_classes(); ++c) {
      out << format_double(dataset.predictions()(i, c)) << ',';
    }
    out << dataset.label(i) << ',' << format_double(dataset.weight(i)) << '\n';
  }
  write_text_file(path, out.str());
}

void save_predictions_csv(const std::string& path, const Eigen::MatrixXd& predictions,
                          const std::optional<std::vector<int>>& labels,
                          const std::optional<Eigen::VectorXd>& weights) {
  std::ostringstream out;
  for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
    if (c) out << ',';
    out << 'p' << c;
  }
  if (labels) out << ",label";
  if (weights) out << ",weight";
  out << '\n';
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
      if (c) out << ',';
      out << format_double(predictions(i, c));
    }
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    if (weights) out << ',' << format_double((*weights)[i]);
    out << '\n';
  }
  write_text_file(path, out.str());
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix,
                     const std::string& header) {
  std::ostringstream out;
  out << header << '\n';
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c) out << ',';
      out << format_double(matrix(i, c));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

LossMatrix loss_matrix_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw invalid_input_error(std::string("loss JSON parse error: ") + e.what());
  }
  try {
    const json& rows = doc.at("entries");
    const int K = doc.at("num_actions").get<int>();
    const int C = doc.at("num_classes").get<int>();
    if (static_cast<int>(rows.size()) != K) {
      throw invalid_input_error("loss JSON entries row count != num_actions");
    }
    Eigen::MatrixXd entries(K, C);
    for (int a = 0; a < K; ++a) {
      const json& row = rows[static_cast<std::size_t>(a)];
      if (static_cast<int>(row.size()) != C) {
        throw invalid_input_error("loss JSON entries column count != num_classes");
      }
      for (int c = 0; c < C; ++c) entries(a, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return LossMatrix(std::move(entries));
  } catch (const json::exception& e) {
    throw invalid_input_error(std::string("loss JSON is missing fields: ") + e.what());
  }
}

std::string loss_matrix_to_json_string(const LossMatrix& loss, int indent) {
  json doc;
  doc["num_actions"] = loss.num_actions();
  doc["num_classes"] = loss.num_classes();
  json rows = json::array();
  for (int a = 0; a < loss.num_actions(); ++a) {
    json row = json::array();
    for (int c = 0; c < loss.num_classes(); ++c) row.push_back(loss(a, c));
    rows.push_back(std::move(row));
  }
  doc["entries"] = std::move(rows);
  return doc.dump(indent);
}

}  // namespace decal
