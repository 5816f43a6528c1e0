#pragma once

#include <cstdint>
#include <string>

#include "decal/types.hpp"

namespace decal {

/// How synthetic predictions deviate from the generating distribution:
/// identity leaves them perfect, temperature(t) sharpens (t < 1) or flattens
/// (t > 1) via softmax(log p / t), swap(c1, c2, rho) moves a fraction of
/// class c1's mass onto c2.
struct DistortionSpec {
  enum class Kind { identity, temperature, swap };

  Kind kind = Kind::identity;
  double temperature = 1.0;
  int swap_from = 0;
  int swap_to = 1;
  double swap_fraction = 0.0;

  /// Parses "identity", "temperature:T" or "swap:C1,C2,RHO".
  static DistortionSpec parse(const std::string& text);
  std::string to_string() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& p) const;
};

struct SyntheticData {
  CalibrationDataset dataset;
  Eigen::MatrixXd ground_truth;  // generating distribution p*, one row per sample
};

/// Draws p* ~ Dirichlet(alpha * 1), a label from p*, and emits the distorted
/// p* as the prediction. Byte-for-byte deterministic for a given seed.
SyntheticData generate_synthetic(int num_classes, std::int64_t num_samples, double alpha,
                                 const DistortionSpec& distortion, std::uint64_t seed);

}  // namespace decal
