#include <doctest.h>

#include <random>

#include "decal/errors.hpp"
#include "decal/numeric.hpp"
#include "decal/types.hpp"
#include "support.hpp"

using namespace decal;

TEST_CASE("probability vectors renormalize small drift and reject large drift") {
  ProbabilityVector close{0.3, 0.7000001};
  CHECK(close.values().sum() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(ProbabilityVector(Eigen::Vector2d(0.3, 0.2)), invalid_input_error);
  CHECK_THROWS_AS(ProbabilityVector(Eigen::Vector2d(-0.2, 1.2)), invalid_input_error);
  CHECK_THROWS_AS(ProbabilityVector(Eigen::VectorXd::Ones(1)), invalid_input_error);
}

TEST_CASE("dataset validates members and exposes weighted expectations") {
  CalibrationDataset data = testing::two_cell_dataset();
  CHECK(data.num_classes() == 2);
  CHECK(data.size() == 4);
  CHECK(data.total_weight() == doctest::Approx(1.0));
  CHECK(data.label_mean()[0] == doctest::Approx(0.5));

  std::vector<Sample> bad{{ProbabilityVector{0.5, 0.5}, LabelObservation{2}, 1.0}};
  CHECK_THROWS_AS(CalibrationDataset(2, bad), invalid_input_error);
  std::vector<Sample> zero_weight{{ProbabilityVector{0.5, 0.5}, LabelObservation{0}, 0.0}};
  CHECK_THROWS_AS(CalibrationDataset(2, zero_weight), invalid_input_error);
  CHECK_THROWS_AS(CalibrationDataset(2, std::vector<Sample>{}), invalid_input_error);
}

TEST_CASE("simplex projection matches the hand examples") {
  const ProbabilityVector identity = project_to_simplex(Eigen::Vector2d(0.3, 0.7));
  CHECK(identity[0] == doctest::Approx(0.3).epsilon(1e-15));

  const ProbabilityVector shifted = project_to_simplex(Eigen::Vector2d(0.7, 0.5));
  CHECK(shifted[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(shifted[1] == doctest::Approx(0.4).epsilon(1e-12));

  CHECK_THROWS_AS(project_to_simplex(Eigen::Vector2d(0.1, std::nan(""))), invalid_input_error);
}

TEST_CASE("simplex projection minimizes L2 distance against a dense grid") {
  const Eigen::Vector3d v(1.4, -0.2, 0.1);
  const Eigen::VectorXd proj = project_to_simplex(v).values();

  // Grid oracle: every simplex point with coordinates on a 1/400 lattice.
  const int steps = 400;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; i + j <= steps; ++j) {
      const Eigen::Vector3d q(static_cast<double>(i) / steps, static_cast<double>(j) / steps,
                              static_cast<double>(steps - i - j) / steps);
      best = std::min(best, (q - v).norm());
    }
  }
  CHECK((proj - v).norm() <= best + 1e-4);
  CHECK(proj.minCoeff() >= 0.0);
  CHECK(proj.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simplex projection is idempotent and non-expansive") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int C = 2 + static_cast<int>(rng() % 6);
    Eigen::VectorXd u(C);
    Eigen::VectorXd v(C);
    for (int c = 0; c < C; ++c) {
      u[c] = normal(rng);
      v[c] = normal(rng);
    }
    const Eigen::VectorXd pu = project_to_simplex_raw(u);
    const Eigen::VectorXd pv = project_to_simplex_raw(v);
    CHECK((project_to_simplex_raw(pu) - pu).norm() <= 1e-12);
    CHECK((pu - pv).norm() <= (u - v).norm() + 1e-12);
  }
}

TEST_CASE("pseudo inverse handles the diagonal and rank-deficient cases") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  CHECK((pseudo_inverse(eye) - eye).norm() <= 1e-12);

  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
  diag(0, 0) = 0.5;
  const Eigen::MatrixXd dinv = pseudo_inverse(diag);
  CHECK(dinv(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(dinv(1, 1) == doctest::Approx(0.0));

  // Soft partition at w = 0 makes D constant 1/K^2; check the Moore-Penrose
  // identities numerically.
  const int K = 4;
  const Eigen::MatrixXd m = Eigen::MatrixXd::Constant(K, K, 1.0 / (K * K));
  const Eigen::MatrixXd mp = pseudo_inverse(m);
  CHECK((m * mp * m - m).norm() <= 1e-12);
  CHECK((mp * m * mp - mp).norm() <= 1e-9);
  CHECK((m * mp - (m * mp).transpose()).norm() <= 1e-12);

  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(pseudo_inverse(asym), invalid_input_error);
  Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(2, 2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(pseudo_inverse(indef), invalid_input_error);
}

TEST_CASE("hard partitions are indicator-valued with lowest-index ties") {
  Eigen::MatrixXd w(2, 2);
  w << 1.0, 0.0, 1.0, 0.0;  // identical rows: everything ties to cell 0
  PartitionWeights tied(PartitionMode::hard, w);
  CHECK(tied.hard_cell(Eigen::Vector2d(0.5, 0.5)) == 0);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int C = 2 + static_cast<int>(rng() % 4);
    const int K = 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd wm(K, C);
    for (int a = 0; a < K; ++a) {
      for (int c = 0; c < C; ++c) wm(a, c) = normal(rng);
    }
    Eigen::VectorXd raw(C);
    for (int c = 0; c < C; ++c) raw[c] = uniform(rng) + 1e-3;
    const Eigen::VectorXd q = raw / raw.sum();

    PartitionWeights hard(PartitionMode::hard, wm);
    const Eigen::VectorXd b = hard.memberships(q);
    CHECK(b.sum() == doctest::Approx(1.0));
    for (int a = 0; a < K; ++a) {
      CHECK((b[a] == 0.0 || b[a] == 1.0));
      CHECK(b[a] * b[a] == b[a]);
      for (int a2 = a + 1; a2 < K; ++a2) CHECK(b[a] * b[a2] == 0.0);
    }

    PartitionWeights soft(PartitionMode::soft, wm);
    const Eigen::VectorXd bs = soft.memberships(q);
    CHECK(std::abs(bs.sum() - 1.0) <= 1e-12);
    CHECK(bs.minCoeff() >= 0.0);
  }
}
