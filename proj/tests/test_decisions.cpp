#include <doctest.h>

#include <random>

#include "decal/decisions.hpp"
#include "decal/errors.hpp"
#include "support.hpp"

using namespace decal;

TEST_CASE("bayes decisions follow expected loss with lowest-index ties") {
  const LossMatrix zo = testing::zero_one_loss(2);
  CHECK(bayes_decide(zo, ProbabilityVector{0.7, 0.3}) == 0);
  CHECK(bayes_decide(zo, ProbabilityVector{0.3, 0.7}) == 1);
  CHECK(bayes_decide(zo, ProbabilityVector{0.5, 0.5}) == 0);

  CHECK_THROWS_AS(bayes_decide(testing::zero_one_loss(3), ProbabilityVector{0.5, 0.5}),
                  invalid_input_error);
}

TEST_CASE("the three-class asymmetric reward matrix picks the hedging action") {
  Eigen::MatrixXd by_outcome(3, 3);
  // Row y, column a: severe negative reward when (y, a) is (0,1), (1,2) or (2,0).
  by_outcome << 0, -1000, -1,
                -1, 0, -1000,
                -1000, -1, 0;
  const LossMatrix loss(Eigen::MatrixXd(by_outcome.transpose()));  // entries(a, y)
  const ProbabilityVector q{0.5, 0.3, 0.2};

  const Eigen::VectorXd expected = loss.entries() * q.values();
  CHECK(expected[0] == doctest::Approx(-200.3));
  CHECK(expected[1] == doctest::Approx(-500.2));
  CHECK(expected[2] == doctest::Approx(-300.5));
  CHECK(bayes_decide(loss, q) == 1);
}

TEST_CASE("bayes decisions ignore outcome-only loss shifts") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 2 + static_cast<int>(rng() % 4);
    const int C = 2 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd entries(K, C);
    for (int a = 0; a < K; ++a) {
      for (int c = 0; c < C; ++c) entries(a, c) = normal(rng);
    }
    Eigen::RowVectorXd shift(C);
    for (int c = 0; c < C; ++c) shift[c] = normal(rng);

    Eigen::VectorXd raw(C);
    for (int c = 0; c < C; ++c) raw[c] = uniform(rng);
    const ProbabilityVector q(Eigen::VectorXd(raw / raw.sum()));

    const LossMatrix base(entries);
    const LossMatrix shifted(Eigen::MatrixXd(entries.rowwise() + shift));
    CHECK(bayes_decide(base, q) == bayes_decide(shifted, q));
  }
}

TEST_CASE("refrain loss reproduces the threshold rule") {
  const LossMatrix refrain = make_refrain_loss(0.3, 2);
  CHECK(refrain.num_actions() == 3);
  CHECK(bayes_decide(refrain, ProbabilityVector{0.8, 0.2}) == 0);   // 0.8 > 0.7
  CHECK(bayes_decide(refrain, ProbabilityVector{0.6, 0.4}) == 2);   // abstain
  CHECK(bayes_decide(refrain, ProbabilityVector{0.2, 0.8}) == 1);

  // beta = 0: abstaining is free, so it is always among the optimal actions.
  const LossMatrix free_abstain = make_refrain_loss(0.0, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uniform(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd raw(3);
    for (int c = 0; c < 3; ++c) raw[c] = uniform(rng);
    const ProbabilityVector q(Eigen::VectorXd(raw / raw.sum()));
    const int action = bayes_decide(free_abstain, q);
    const Eigen::VectorXd expected = free_abstain.entries() * q.values();
    CHECK(expected[action] <= expected[3] + 1e-15);
    if (q.values().maxCoeff() < 1.0) CHECK(action == 3);
  }

  CHECK_THROWS_AS(make_refrain_loss(-0.1, 2), invalid_input_error);
  CHECK_THROWS_AS(make_refrain_loss(1.5, 2), invalid_input_error);
}

TEST_CASE("classwise screening loss matches its closed-form thresholds") {
  const LossMatrix screen = make_classwise_loss(0, 2.0, 2.0, 2);
  CHECK(bayes_decide(screen, ProbabilityVector{0.9, 0.1}) == 0);  // claim
  CHECK(bayes_decide(screen, ProbabilityVector{0.5, 0.5}) == 0);  // exact tie, T first
  CHECK(bayes_decide(screen, ProbabilityVector{0.1, 0.9}) == 1);  // deny

  const LossMatrix degenerate = make_classwise_loss(0, 0.0, 0.0, 2);
  CHECK(bayes_decide(degenerate, ProbabilityVector{0.5, 0.5}) == 0);

  // For beta1, beta2 > 1 the Bayes rule reduces to two thresholds on p_c.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> beta_dist(1.01, 6.0);
  std::uniform_real_distribution<double> prob(0.001, 0.999);
  for (int trial = 0; trial < 300; ++trial) {
    const double b1 = beta_dist(rng);
    const double b2 = beta_dist(rng);
    const double upper = std::max(1.0 - 1.0 / b1, b1 / (b1 + b2));
    const double lower = std::min(1.0 / b2, b1 / (b1 + b2));
    const double pc = prob(rng);
    if (std::abs(pc - upper) < 1e-9 || std::abs(pc - lower) < 1e-9) continue;
    const LossMatrix loss = make_classwise_loss(0, b1, b2, 2);
    const int action = bayes_decide(loss, ProbabilityVector{pc, 1.0 - pc});
    if (pc > upper) {
      CHECK(action == 0);
    } else if (pc < lower) {
      CHECK(action == 1);
    } else {
      CHECK(action == 2);
    }
  }
}

TEST_CASE("expected losses on the two-cell dataset") {
  const CalibrationDataset data = testing::two_cell_dataset();
  const LossMatrix zo = testing::zero_one_loss(2);
  const DecisionRule rule(zo);
  CHECK(expected_loss_simulated(data, zo, rule) == doctest::Approx(0.1));
  CHECK(expected_loss_true(data, zo, rule) == doctest::Approx(0.3));

  // Perfect one-hot predictor: both notions vanish.
  std::vector<Sample> perfect{
      {ProbabilityVector{1.0, 0.0}, LabelObservation{0}, 1.0},
      {ProbabilityVector{0.0, 1.0}, LabelObservation{1}, 1.0},
  };
  const CalibrationDataset exact(2, perfect);
  CHECK(expected_loss_simulated(exact, zo, rule) == doctest::Approx(0.0));
  CHECK(expected_loss_true(exact, zo, rule) == doctest::Approx(0.0));

  // Uniform prediction simulates half loss regardless of the tie direction.
  std::vector<Sample> uniform{{ProbabilityVector{0.5, 0.5}, LabelObservation{0}, 1.0}};
  CHECK(expected_loss_simulated(CalibrationDataset(2, uniform), zo, rule) ==
        doctest::Approx(0.5));

  // Rule that always answers 0 against labels that are always 1.
  Eigen::MatrixXd force(2, 2);
  force << 0.0, 0.0, 1.0, 1.0;  // action 0 free, action 1 never chosen
  const DecisionRule always_zero{LossMatrix(force)};
  std::vector<Sample> ones{{ProbabilityVector{0.4, 0.6}, LabelObservation{1}, 2.0}};
  CHECK(expected_loss_true(CalibrationDataset(2, ones), zo, always_zero) == doctest::Approx(1.0));

  // Mixing a loss with a rule over a different action space is rejected.
  const DecisionRule refrain_rule{make_refrain_loss(0.3, 2)};
  CHECK_THROWS_AS(expected_loss_simulated(data, zo, refrain_rule), invalid_input_error);
  CHECK_THROWS_AS(expected_loss_true(data, zo, refrain_rule), invalid_input_error);
}

TEST_CASE("loss gap normalizes and is scale invariant") {
  const CalibrationDataset data = testing::two_cell_dataset();
  const LossMatrix zo = testing::zero_one_loss(2);
  const LossGapReport report = loss_gap(data, zo);
  CHECK(report.simulated_loss == doctest::Approx(0.1));
  CHECK(report.true_loss == doctest::Approx(0.3));
  CHECK(report.gap == doctest::Approx(0.2));

  const LossGapReport scaled = loss_gap(data, zo.scaled(10.0));
  CHECK(scaled.gap == doctest::Approx(report.gap).epsilon(1e-12));

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> scale(0.1, 50.0);
  const auto losses = sample_random_losses(3, 2, 10, 99);
  for (const LossMatrix& loss : losses) {
    const double c = scale(rng);
    CHECK(loss_gap(data, loss.scaled(c)).gap ==
          doctest::Approx(loss_gap(data, loss).gap).epsilon(1e-9));
  }

  CHECK_THROWS_AS(loss_gap(data, LossMatrix(2, 2)), invalid_input_error);

  // A predictor equal to each group's label mean has zero gap.
  std::mt19937_64 grng(7);
  const CalibrationDataset calibrated = testing::random_grouped_dataset(3, 6, grng, true);
  for (const LossMatrix& loss : sample_random_losses(3, 3, 10, 123)) {
    CHECK(loss_gap(calibrated, loss).gap <= 1e-12);
  }
}

TEST_CASE("random losses are deterministic with standard normal entries") {
  const auto a = sample_random_losses(2, 2, 3, 7);
  const auto b = sample_random_losses(2, 2, 3, 7);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].entries() == b[i].entries());
  }

  const auto batch = sample_random_losses(3, 7, 500, 2024);
  CHECK(batch.size() == 500);
  CHECK(batch[0].num_actions() == 3);
  CHECK(batch[0].num_classes() == 7);

  double mean = 0.0;
  std::size_t count = 0;
  for (const LossMatrix& loss : sample_random_losses(2, 2, 10000, 3)) {
    mean += loss.entries().sum();
    count += 4;
  }
  mean /= static_cast<double>(count);
  CHECK(std::abs(mean) <= 0.02);
}
