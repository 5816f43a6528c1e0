#pragma once

#include <Eigen/Core>

#include "decal/types.hpp"

namespace decal {

/// Exact Euclidean projection of v onto the probability simplex, computed by
/// the sort-and-threshold rule. Idempotent and non-expansive in L2 (the
/// properties the recalibration convergence argument leans on).
ProbabilityVector project_to_simplex(const Eigen::VectorXd& v);

/// Raw-vector variant used in inner loops; returns the projected coordinates
/// without constructing a ProbabilityVector.
Eigen::VectorXd project_to_simplex_raw(const Eigen::VectorXd& v);

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite
/// matrix via eigendecomposition. Eigenvalues at or below tol times the
/// largest eigenvalue are treated as zero. Rejects matrices that are
/// asymmetric or indefinite beyond tol.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double tol = 1e-10);

}  // namespace decal
