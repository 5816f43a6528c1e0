#include "decal/synthetic.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "decal/errors.hpp"
#include "decal/io.hpp"
#include "decal/parallel.hpp"

namespace decal {

DistortionSpec DistortionSpec::parse(const std::string& text) {
  DistortionSpec spec;
  if (text == "identity" || text.empty()) {
    spec.kind = Kind::identity;
    return spec;
  }
  const std::size_t colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (name == "temperature") {
    spec.kind = Kind::temperature;
    try {
      spec.temperature = std::stod(args);
    } catch (...) {
      throw invalid_input_error("distortion 'temperature:T' needs a numeric T, got '" + args + "'");
    }
    if (!(spec.temperature > 0.0)) {
      throw invalid_input_error("distortion temperature must be positive");
    }
    return spec;
  }
  if (name == "swap") {
    spec.kind = Kind::swap;
    std::istringstream in(args);
    char comma1 = 0;
    char comma2 = 0;
    if (!(in >> spec.swap_from >> comma1 >> spec.swap_to >> comma2 >> spec.swap_fraction) ||
        comma1 != ',' || comma2 != ',' || !(in >> std::ws).eof()) {
      throw invalid_input_error("distortion 'swap:C1,C2,RHO' is malformed: '" + args + "'");
    }
    if (spec.swap_from == spec.swap_to) {
      throw invalid_input_error("swap distortion needs two distinct classes");
    }
    if (spec.swap_from < 0 || spec.swap_to < 0) {
      throw invalid_input_error("swap distortion class indices must be nonnegative");
    }
    if (spec.swap_fraction < 0.0 || spec.swap_fraction > 1.0) {
      throw invalid_input_error("swap distortion fraction must lie in [0, 1]");
    }
    return spec;
  }
  throw invalid_input_error("unknown distortion '" + name +
                            "' (expected identity, temperature:T or swap:C1,C2,RHO)");
}

std::string DistortionSpec::to_string() const {
  switch (kind) {
    case Kind::identity:
      return "identity";
    case Kind::temperature:
      return "temperature:" + format_double(temperature);
    case Kind::swap:
      return "swap:" + std::to_string(swap_from) + "," + std::to_string(swap_to) + "," +
             format_double(swap_fraction);
  }
  return "identity";
}

Eigen::VectorXd DistortionSpec::apply(const Eigen::VectorXd& p) const {
  switch (kind) {
    case Kind::identity:
      return p;
    case Kind::temperature: {
      // softmax(log p / t) == normalize(p^(1/t))
      Eigen::VectorXd logs = p.array().max(1e-300).log() / temperature;
      logs.array() -= logs.maxCoeff();
      Eigen::VectorXd e = logs.array().exp();
      return e / e.sum();
    }
    case Kind::swap: {
      if (swap_from >= p.size() || swap_to >= p.size()) {
        throw invalid_input_error("swap distortion class index exceeds class count");
      }
      Eigen::VectorXd out = p;
      const double moved = swap_fraction * out[swap_from];
      out[swap_from] -= moved;
      out[swap_to] += moved;
      return out;
    }
  }
  return p;
}

SyntheticData generate_synthetic(int num_classes, std::int64_t num_samples, double alpha,
                                 const DistortionSpec& distortion, std::uint64_t seed) {
  if (num_classes < 2) throw invalid_input_error("synthetic data needs at least 2 classes");
  if (num_samples < 1) throw invalid_input_error("synthetic data needs at least 1 sample");
  if (!(alpha > 0.0)) throw invalid_input_error("dirichlet alpha must be positive");

  std::mt19937_64 rng(derive_seed(seed, 0x73796e74ULL));
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Eigen::MatrixXd truth(num_samples, num_classes);
  Eigen::MatrixXd predictions(num_samples, num_classes);
  std::vector<int> labels(static_cast<std::size_t>(num_samples));

  Eigen::VectorXd p(num_classes);
  for (std::int64_t i = 0; i < num_samples; ++i) {
    double total = 0.0;
    for (int c = 0; c < num_classes; ++c) {
      p[c] = gamma(rng);
      total += p[c];
    }
    p /= total;
    truth.row(i) = p.transpose();

    const double u = uniform(rng);
    double cum = 0.0;
    int label = num_classes - 1;
    for (int c = 0; c < num_classes; ++c) {
      cum += p[c];
      if (u < cum) {
        label = c;
        break;
      }
    }
    labels[static_cast<std::size_t>(i)] = label;
    predictions.row(i) = distortion.apply(p).transpose();
  }

  CalibrationDataset dataset(std::move(predictions), std::move(labels),
                             Eigen::VectorXd::Ones(num_samples));
  return SyntheticData{std::move(dataset), std::move(truth)};
}

}  // namespace decal
