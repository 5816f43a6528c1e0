#include "decal/partitions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "decal/errors.hpp"
#include "decal/parallel.hpp"

namespace decal {
namespace {

constexpr double kCanonicalInitScale = 4.0;

PartitionObjective objective_from_stats(Eigen::MatrixXd per_cell_vectors,
                                        Eigen::VectorXd per_cell_mass) {
  PartitionObjective obj;
  obj.per_cell_vectors = std::move(per_cell_vectors);
  obj.per_cell_mass = std::move(per_cell_mass);
  const Eigen::VectorXd norms = obj.per_cell_vectors.rowwise().norm();
  obj.norm_value = norms.sum();
  obj.squared_value = norms.squaredNorm();
  return obj;
}

// Shared per-search state: residuals and weighted matrices are fixed while
// the partition weights move.
struct SearchProblem {
  explicit SearchProblem(const CalibrationDataset& dataset)
      : predictions(dataset.predictions()),
        residuals(dataset.predictions() - dataset.one_hot_labels()),
        total_weight(dataset.total_weight()) {
    weighted_residuals = dataset.weights().asDiagonal() * residuals;
    weighted_predictions = dataset.weights().asDiagonal() * predictions;
  }

  struct Scratch {
    Eigen::MatrixXd b;         // N x K soft memberships
    Eigen::MatrixXd gradient;  // K x C
  };

  double soft_squared_with_gradient(const Eigen::MatrixXd& w, Scratch& scratch) const {
    scratch.b = softmax_rows(predictions * w.transpose());
    const Eigen::MatrixXd r = (scratch.b.transpose() * weighted_residuals) / total_weight;
    const Eigen::MatrixXd s = residuals * r.transpose();  // N x K
    const Eigen::VectorXd row_dot = (scratch.b.array() * s.array()).rowwise().sum();
    const Eigen::MatrixXd t = scratch.b.array() * (s.colwise() - row_dot).array();
    scratch.gradient = (2.0 / total_weight) * (t.transpose() * weighted_predictions);
    return r.squaredNorm();
  }

  void assignments_from_memberships(const Eigen::MatrixXd& b, std::vector<int>& cells) const {
    cells.resize(static_cast<std::size_t>(b.rows()));
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      Eigen::Index top = 0;
      b.row(i).maxCoeff(&top);
      cells[static_cast<std::size_t>(i)] = static_cast<int>(top);
    }
  }

  // Norm objective of the hard partition given by per-sample cells.
  double hard_norm(const std::vector<int>& cells, int num_cells) const {
    Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(num_cells, residuals.cols());
    for (Eigen::Index i = 0; i < residuals.rows(); ++i) {
      vectors.row(cells[static_cast<std::size_t>(i)]) += weighted_residuals.row(i);
    }
    return vectors.rowwise().norm().sum() / total_weight;
  }

  const Eigen::MatrixXd& predictions;
  Eigen::MatrixXd residuals;             // prediction - one_hot(label)
  Eigen::MatrixXd weighted_residuals;
  Eigen::MatrixXd weighted_predictions;
  double total_weight;
};

Eigen::MatrixXd canonical_init(const CalibrationDataset& dataset, int num_cells) {
  const int C = dataset.num_classes();
  Eigen::VectorXd argmax_mass = Eigen::VectorXd::Zero(C);
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    Eigen::Index top = 0;
    dataset.predictions().row(i).maxCoeff(&top);
    argmax_mass[top] += dataset.weight(i);
  }
  std::vector<int> order(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) order[static_cast<std::size_t>(c)] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return argmax_mass[a] > argmax_mass[b]; });

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_cells, C);
  for (int a = 0; a < std::min(num_cells, C); ++a) {
    w(a, order[static_cast<std::size_t>(a)]) = kCanonicalInitScale;
  }
  return w;
}

// Restart initialization. The surrogate is multimodal (at high sharpness it
// is piecewise constant in the cell assignment), so restarts must cover both
// weight-space directions and the support geometry: even restarts draw
// gaussian rows with sharpness cycling over 1/2/4/8, odd restarts seed each
// cell from a sampled prediction (a Euclidean Voronoi partition around data
// prototypes).
Eigen::MatrixXd random_init(const CalibrationDataset& dataset, int num_cells, int restart,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int num_classes = dataset.num_classes();
  Eigen::MatrixXd w(num_cells, num_classes);
  if (restart % 2 == 0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = static_cast<double>(1 << ((restart / 2) % 4)) /
                         std::sqrt(static_cast<double>(num_classes));
    for (int a = 0; a < num_cells; ++a) {
      for (int c = 0; c < num_classes; ++c) w(a, c) = scale * normal(rng);
    }
  } else {
    // Euclidean Voronoi cells around sampled predictions: on the simplex the
    // bias term -|q_a|^2 / 2 is a multiple of the all-ones row, so these
    // partitions are exactly representable by linear scores.
    const double scale = 8.0 * static_cast<double>(1 << ((restart / 2) % 3));
    const std::uint64_t n = static_cast<std::uint64_t>(dataset.size());
    for (int a = 0; a < num_cells; ++a) {
      const Eigen::RowVectorXd prototype =
          dataset.predictions().row(static_cast<Eigen::Index>(rng() % n));
      w.row(a) = scale * (prototype.array() - 0.5 * prototype.squaredNorm()).matrix();
    }
  }
  return w;
}

struct AscentResult {
  Eigen::MatrixXd final_w;
  Eigen::MatrixXd best_hard_w;  // iterate whose argmax snap certified best
  double best_hard_norm = -1.0;
};

// Discrete refinement of a hard partition. Moving w_a along a fixed row
// direction d changes sample i's score for cell a by beta * <q_i, d>, so the
// certified norm is piecewise constant in beta with breakpoints at
// (other_max_i - score_a_i) / <q_i, d>. Sweep those breakpoints for the
// all-ones direction (a pure boundary translation on the simplex) and each
// coordinate direction (boundary tilts), one cell at a time, keeping moves
// that improve the certificate, until a full pass stops improving.
// Candidate counts are capped per sweep to keep large datasets cheap.
Eigen::MatrixXd refine_partition(const SearchProblem& problem, Eigen::MatrixXd w, int num_cells) {
  if (num_cells < 2) return w;
  const Eigen::Index n = problem.predictions.rows();
  const int num_classes = static_cast<int>(problem.predictions.cols());
  constexpr int kMaxCandidates = 48;
  constexpr int kMaxRounds = 4;
  constexpr double kTinyGain = 1e-14;

  std::vector<int> cells(static_cast<std::size_t>(n));
  std::vector<int> other_best(static_cast<std::size_t>(n));
  std::vector<double> deltas(static_cast<std::size_t>(n));
  std::vector<double> gains(static_cast<std::size_t>(n));
  std::vector<double> breakpoints;
  std::vector<double> candidates;

  auto assignments_norm = [&](const Eigen::MatrixXd& weights) {
    const Eigen::MatrixXd scores = problem.predictions * weights.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (int a = 1; a < num_cells; ++a) {
        if (scores(i, a) > scores(i, best)) best = a;
      }
      cells[static_cast<std::size_t>(i)] = best;
    }
    return problem.hard_norm(cells, num_cells);
  };

  double best_norm = assignments_norm(w);
  for (int round = 0; round < kMaxRounds; ++round) {
    bool improved = false;
    for (int a = 0; a < num_cells; ++a) {
      // direction: the all-ones row first, then each coordinate axis.
      for (int direction = -1; direction < num_classes; ++direction) {
        const Eigen::MatrixXd scores = problem.predictions * w.transpose();
        breakpoints.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
          double other = -std::numeric_limits<double>::infinity();
          int arg = a == 0 ? 1 : 0;
          for (int k = 0; k < num_cells; ++k) {
            if (k == a) continue;
            if (scores(i, k) > other) {
              other = scores(i, k);
              arg = k;
            }
          }
          other_best[static_cast<std::size_t>(i)] = arg;
          deltas[static_cast<std::size_t>(i)] = other - scores(i, a);
          const double gain = direction < 0 ? 1.0 : problem.predictions(i, direction);
          gains[static_cast<std::size_t>(i)] = gain;
          if (gain > kTinyGain) {
            breakpoints.push_back(deltas[static_cast<std::size_t>(i)] / gain);
          }
        }
        if (breakpoints.empty()) continue;
        std::sort(breakpoints.begin(), breakpoints.end());
        breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                          breakpoints.end());

        candidates.clear();
        if (static_cast<int>(breakpoints.size()) + 1 <= kMaxCandidates) {
          candidates.push_back(breakpoints.front() - 1.0);
          for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
            candidates.push_back(0.5 * (breakpoints[j] + breakpoints[j + 1]));
          }
          candidates.push_back(breakpoints.back() + 1.0);
        } else {
          for (int j = 0; j < kMaxCandidates; ++j) {
            const std::size_t idx =
                static_cast<std::size_t>(j) * (breakpoints.size() - 1) / (kMaxCandidates - 1);
            candidates.push_back(breakpoints[idx] + 1e-12);
          }
        }

        double move_best = best_norm;
        double move_beta = 0.0;
        for (const double beta : candidates) {
          for (Eigen::Index i = 0; i < n; ++i) {
            const std::size_t s = static_cast<std::size_t>(i);
            cells[s] = beta * gains[s] > deltas[s] ? a : other_best[s];
          }
          const double norm = problem.hard_norm(cells, num_cells);
          if (norm > move_best + 1e-15) {
            move_best = norm;
            move_beta = beta;
          }
        }
        if (move_beta != 0.0) {
          if (direction < 0) {
            w.row(a).array() += move_beta;
          } else {
            w(a, direction) += move_beta;
          }
          best_norm = move_best;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return w;
}

// Monotone ascent on the soft squared surrogate with step halving on
// rejection. The certified quantity is the norm objective of the hard snap,
// which can peak strictly inside the trajectory, so every change of the
// argmax cell assignment is certified on the fly (an O(N C) accumulation).
AscentResult ascend(const SearchProblem& problem, Eigen::MatrixXd w, int num_cells,
                    const SearchConfig& config) {
  SearchProblem::Scratch scratch;
  SearchProblem::Scratch candidate_scratch;
  double value = problem.soft_squared_with_gradient(w, scratch);

  AscentResult result;
  std::vector<int> cells;
  std::vector<int> certified_cells;
  problem.assignments_from_memberships(scratch.b, cells);
  certified_cells = cells;
  result.best_hard_norm = problem.hard_norm(cells, num_cells);
  result.best_hard_w = w;

  double step = config.step_size;
  for (int it = 0; it < config.steps; ++it) {
    const Eigen::MatrixXd candidate = w + step * scratch.gradient;
    const double candidate_value =
        problem.soft_squared_with_gradient(candidate, candidate_scratch);
    if (candidate_value > value) {
      w = candidate;
      value = candidate_value;
      std::swap(scratch, candidate_scratch);
      problem.assignments_from_memberships(scratch.b, cells);
      if (cells != certified_cells) {
        certified_cells = cells;
        const double norm = problem.hard_norm(cells, num_cells);
        if (norm > result.best_hard_norm) {
          result.best_hard_norm = norm;
          result.best_hard_w = w;
        }
      }
    } else {
      step *= 0.5;
      if (step < config.min_step_size) break;
    }
  }
  result.final_w = std::move(w);
  return result;
}

// ---------------------------------------------------------------------------
// Brute-force oracle machinery.

struct SupportGroup {
  Eigen::VectorXd point;   // the (exact) prediction value
  Eigen::VectorXd moment;  // sum of weight * (prediction - one_hot) / W
  double mass = 0.0;       // normalized
};

std::vector<SupportGroup> collect_support(const CalibrationDataset& dataset, int max_groups) {
  std::map<std::vector<std::int64_t>, std::size_t> index;
  std::vector<SupportGroup> groups;
  const int C = dataset.num_classes();
  const double W = dataset.total_weight();
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    std::vector<std::int64_t> key(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      key[static_cast<std::size_t>(c)] = std::llround(dataset.predictions()(i, c) * 1e9);
    }
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) {
      SupportGroup g;
      g.point = dataset.predictions().row(i).transpose();
      g.moment = Eigen::VectorXd::Zero(C);
      groups.push_back(std::move(g));
      if (max_groups > 0 && groups.size() > static_cast<std::size_t>(max_groups)) {
        throw unsupported_instance_error("support exceeds " + std::to_string(max_groups) +
                                         " distinct predictions");
      }
    }
    SupportGroup& g = groups[it->second];
    const double wi = dataset.weight(i);
    Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(C);
    one_hot[dataset.label(i)] = 1.0;
    g.moment += wi / W * (dataset.predictions().row(i).transpose() - one_hot);
    g.mass += wi / W;
  }
  return groups;
}

PartitionObjective objective_from_cells(const std::vector<SupportGroup>& groups,
                                        const std::vector<int>& cell_of_group, int num_cells,
                                        int num_classes) {
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(num_cells, num_classes);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(num_cells);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    vectors.row(cell_of_group[g]) += groups[g].moment.transpose();
    mass[cell_of_group[g]] += groups[g].mass;
  }
  return objective_from_stats(std::move(vectors), std::move(mass));
}

// C == 2: hard linear partitions restrict to consecutive blocks of the
// support sorted by first coordinate; enumerate every placement of at most
// K - 1 cuts.
PartitionObjective oracle_intervals(std::vector<SupportGroup> groups, int num_cells,
                                    int num_classes) {
  std::sort(groups.begin(), groups.end(),
            [](const SupportGroup& a, const SupportGroup& b) { return a.point[0] < b.point[0]; });
  const int M = static_cast<int>(groups.size());
  const int gaps = M - 1;

  double best_norm = -1.0;
  std::vector<int> best_cells;
  std::vector<int> cells(static_cast<std::size_t>(M));
  for (std::uint32_t mask = 0; mask < (1u << gaps); ++mask) {
    if (std::popcount(mask) > num_cells - 1) continue;
    int cell = 0;
    for (int g = 0; g < M; ++g) {
      cells[static_cast<std::size_t>(g)] = cell;
      if (g < gaps && (mask & (1u << g))) ++cell;
    }
    PartitionObjective obj = objective_from_cells(groups, cells, num_cells, num_classes);
    if (obj.norm_value > best_norm) {
      best_norm = obj.norm_value;
      best_cells = cells;
    }
  }
  return objective_from_cells(groups, best_cells, num_cells, num_classes);
}

// Strong separation test for two planar point sets: some direction puts all
// of A strictly above all of B. Candidate directions cover vertex-vertex,
// vertex-edge and edge-edge closest features, so the test is exact for
// disjoint convex hulls.
bool hulls_disjoint_2d(const std::vector<Eigen::Vector2d>& a,
                       const std::vector<Eigen::Vector2d>& b) {
  if (a.empty() || b.empty()) return true;
  std::vector<Eigen::Vector2d> candidates;
  for (const auto& pa : a) {
    for (const auto& pb : b) candidates.push_back(pb - pa);
  }
  auto add_perps = [&candidates](const std::vector<Eigen::Vector2d>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const Eigen::Vector2d d = pts[j] - pts[i];
        candidates.emplace_back(-d.y(), d.x());
      }
    }
  };
  add_perps(a);
  add_perps(b);

  for (const Eigen::Vector2d& d : candidates) {
    if (d.squaredNorm() < 1e-24) continue;
    double min_a = std::numeric_limits<double>::infinity();
    double max_a = -std::numeric_limits<double>::infinity();
    for (const auto& p : a) {
      const double v = d.dot(p);
      min_a = std::min(min_a, v);
      max_a = std::max(max_a, v);
    }
    double min_b = std::numeric_limits<double>::infinity();
    double max_b = -std::numeric_limits<double>::infinity();
    for (const auto& p : b) {
      const double v = d.dot(p);
      min_b = std::min(min_b, v);
      max_b = std::max(max_b, v);
    }
    if (min_a > max_b || min_b > max_a) return true;
  }
  return false;
}

// C == 3, K == 2: enumerate all dichotomies of the support; a dichotomy is
// realizable by a hard linear partition exactly when the planar convex hulls
// of the two sides are disjoint. Subset sums come from a lowbit recurrence;
// the hull test only runs for candidates that beat the incumbent.
PartitionObjective oracle_dichotomies(const std::vector<SupportGroup>& groups, int num_classes) {
  const int M = static_cast<int>(groups.size());
  std::vector<Eigen::Vector2d> planar(static_cast<std::size_t>(M));
  for (int g = 0; g < M; ++g) {
    planar[static_cast<std::size_t>(g)] = groups[static_cast<std::size_t>(g)].point.head<2>();
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(num_classes);
  for (const auto& g : groups) total += g.moment;

  const std::uint32_t limit = 1u << (M - 1);  // group 0 always on side A
  std::vector<Eigen::VectorXd> subset_sum(1u << M);
  subset_sum[0] = Eigen::VectorXd::Zero(num_classes);

  double best_norm = -1.0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t half = 0; half < limit; ++half) {
    const std::uint32_t mask = (half << 1) | 1u;
    if (subset_sum[mask].size() == 0) {
      // fill every prefix of the lowbit chain that is still missing
      std::uint32_t m = mask;
      std::vector<std::uint32_t> chain;
      while (m != 0 && subset_sum[m].size() == 0) {
        chain.push_back(m);
        m &= m - 1;
      }
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const std::uint32_t low = *it & (~*it + 1u);
        const int g = std::countr_zero(low);
        subset_sum[*it] = subset_sum[*it & (*it - 1u)] + groups[static_cast<std::size_t>(g)].moment;
      }
    }
    const Eigen::VectorXd& sum_a = subset_sum[mask];
    const double value = sum_a.norm() + (total - sum_a).norm();
    if (value <= best_norm) continue;

    std::vector<Eigen::Vector2d> side_a;
    std::vector<Eigen::Vector2d> side_b;
    for (int g = 0; g < M; ++g) {
      if (mask & (1u << g)) {
        side_a.push_back(planar[static_cast<std::size_t>(g)]);
      } else {
        side_b.push_back(planar[static_cast<std::size_t>(g)]);
      }
    }
    if (hulls_disjoint_2d(side_a, side_b)) {
      best_norm = value;
      best_mask = mask;
    }
  }

  std::vector<int> cells(static_cast<std::size_t>(M));
  for (int g = 0; g < M; ++g) cells[static_cast<std::size_t>(g)] = (best_mask & (1u << g)) ? 0 : 1;
  return objective_from_cells(groups, cells, 2, num_classes);
}

constexpr int kOracleMaxSupport = 16;

}  // namespace

PartitionObjective evaluate_objective(const CalibrationDataset& dataset,
                                      const PartitionWeights& partition) {
  if (partition.num_classes() != dataset.num_classes()) {
    throw invalid_input_error("partition class count does not match dataset");
  }
  const int K = partition.num_cells();
  const int C = dataset.num_classes();
  const double W = dataset.total_weight();
  const Eigen::MatrixXd residuals = dataset.predictions() - dataset.one_hot_labels();

  Eigen::MatrixXd vectors;
  Eigen::VectorXd mass;
  if (partition.mode() == PartitionMode::soft) {
    const Eigen::MatrixXd b = softmax_rows(dataset.predictions() * partition.w().transpose());
    vectors = b.transpose() * (dataset.weights().asDiagonal() * residuals) / W;
    mass = b.transpose() * dataset.weights() / W;
  } else {
    vectors = Eigen::MatrixXd::Zero(K, C);
    mass = Eigen::VectorXd::Zero(K);
    const Eigen::MatrixXd scores = dataset.predictions() * partition.w().transpose();
    for (Eigen::Index i = 0; i < dataset.size(); ++i) {
      int cell = 0;
      for (int a = 1; a < K; ++a) {
        if (scores(i, a) > scores(i, cell)) cell = a;
      }
      const double wi = dataset.weight(i);
      vectors.row(cell) += wi / W * residuals.row(i);
      mass[cell] += wi / W;
    }
  }
  return objective_from_stats(std::move(vectors), std::move(mass));
}

Eigen::MatrixXd objective_gradient(const CalibrationDataset& dataset, const Eigen::MatrixXd& w) {
  if (w.cols() != dataset.num_classes()) {
    throw invalid_input_error("gradient weight matrix class count does not match dataset");
  }
  SearchProblem problem(dataset);
  SearchProblem::Scratch scratch;
  problem.soft_squared_with_gradient(w, scratch);
  return scratch.gradient;
}

std::pair<PartitionWeights, PartitionObjective> find_worst_partition(
    const CalibrationDataset& dataset, int num_cells, const SearchConfig& config) {
  if (num_cells < 1) throw invalid_input_error("partition search needs at least 1 cell");
  const int C = dataset.num_classes();
  if (num_cells == 1) {
    PartitionWeights single(PartitionMode::hard, Eigen::MatrixXd::Zero(1, C));
    return {single, evaluate_objective(dataset, single)};
  }

  SearchProblem problem(dataset);

  // Candidate list: canonical start first, then the random restarts; each
  // contributes its initialization and its ascent endpoint.
  std::vector<Eigen::MatrixXd> inits;
  inits.push_back(canonical_init(dataset, num_cells));
  for (int r = 0; r < config.restarts; ++r) {
    inits.push_back(
        random_init(dataset, num_cells, r, derive_seed(config.seed, static_cast<std::uint64_t>(r))));
  }

  std::vector<AscentResult> ascents(inits.size());
  parallel_for_index(static_cast<std::int64_t>(inits.size()), [&](std::int64_t r) {
    ascents[static_cast<std::size_t>(r)] =
        ascend(problem, inits[static_cast<std::size_t>(r)], num_cells, config);
  });

  std::vector<const Eigen::MatrixXd*> candidates;
  for (std::size_t r = 0; r < inits.size(); ++r) {
    candidates.push_back(&inits[r]);
    candidates.push_back(&ascents[r].final_w);
    candidates.push_back(&ascents[r].best_hard_w);
  }

  // Certify in the hard family: snap every candidate to its argmax partition
  // and keep the best norm objective (first on ties).
  int best = -1;
  double best_norm = -1.0;
  std::vector<PartitionObjective> objectives(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    PartitionWeights hard(PartitionMode::hard, *candidates[i]);
    objectives[i] = evaluate_objective(dataset, hard);
    if (objectives[i].norm_value > best_norm) {
      best_norm = objectives[i].norm_value;
      best = static_cast<int>(i);
    }
  }

  // Boundary refinement of the winner; kept only when certification improves.
  Eigen::MatrixXd refined =
      refine_partition(problem, *candidates[static_cast<std::size_t>(best)], num_cells);
  PartitionWeights refined_partition(PartitionMode::hard, std::move(refined));
  PartitionObjective refined_objective = evaluate_objective(dataset, refined_partition);
  if (refined_objective.norm_value > best_norm) {
    return {std::move(refined_partition), std::move(refined_objective)};
  }
  PartitionWeights result(PartitionMode::hard, *candidates[static_cast<std::size_t>(best)]);
  return {result, objectives[static_cast<std::size_t>(best)]};
}

bool oracle_supports(const CalibrationDataset& dataset, int num_cells) {
  if (num_cells < 1) return false;
  try {
    const auto groups = collect_support(dataset, kOracleMaxSupport);
    (void)groups;
  } catch (const unsupported_instance_error&) {
    return false;
  }
  const int C = dataset.num_classes();
  return num_cells == 1 || (C == 2 && num_cells <= 3) || (C == 3 && num_cells == 2);
}

PartitionObjective oracle_worst_partition(const CalibrationDataset& dataset, int num_cells) {
  if (num_cells < 1) throw invalid_input_error("oracle needs at least 1 cell");
  const int C = dataset.num_classes();
  const auto groups = collect_support(dataset, kOracleMaxSupport);

  if (num_cells == 1) {
    std::vector<int> cells(groups.size(), 0);
    return objective_from_cells(groups, cells, 1, C);
  }
  if (C == 2 && num_cells <= 3) {
    return oracle_intervals(groups, num_cells, C);
  }
  if (C == 3 && num_cells == 2) {
    return oracle_dichotomies(groups, C);
  }
  throw unsupported_instance_error(
      "oracle supports K == 1, or C == 2 with K <= 3, or C == 3 with K == 2");
}

}  // namespace decal
