#include "decal/numeric.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "decal/errors.hpp"

namespace decal {

Eigen::VectorXd project_to_simplex_raw(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw invalid_input_error("simplex projection input is non-finite");
  const Eigen::Index n = v.size();
  if (n < 2) throw invalid_input_error("simplex projection needs at least 2 coordinates");

  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  // Largest k with sorted[k-1] - (prefix_sum(k) - 1)/k > 0.
  double prefix = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    prefix += sorted[static_cast<std::size_t>(k)];
    const double candidate = (prefix - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) {
      theta = candidate;
    }
  }
  return (v.array() - theta).max(0.0);
}

ProbabilityVector project_to_simplex(const Eigen::VectorXd& v) {
  return ProbabilityVector(project_to_simplex_raw(v));
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) {
    throw invalid_input_error("pseudo_inverse expects a square matrix");
  }
  if (!m.allFinite()) throw invalid_input_error("pseudo_inverse input is non-finite");
  if (tol <= 0.0) throw invalid_input_error("pseudo_inverse tolerance must be positive");

  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw invalid_input_error("pseudo_inverse input is not symmetric within tolerance");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) {
    throw invalid_input_error("pseudo_inverse eigendecomposition failed");
  }
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double lambda_max = std::max(0.0, lambda.maxCoeff());
  const double cutoff = tol * std::max(lambda_max, 1e-300);
  if (lambda.minCoeff() < -tol * std::max(lambda_max, 1.0)) {
    throw invalid_input_error("pseudo_inverse input is indefinite beyond tolerance");
  }

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > cutoff) inv[i] = 1.0 / lambda[i];
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace decal
