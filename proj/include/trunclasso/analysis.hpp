#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "trunclasso/datagen.hpp"
#include "trunclasso/psgd.hpp"

namespace trl {

// Extreme singular values of column-restricted (and row-subsampled)
// submatrices, scaled by 1/sqrt(m). Subset sampling is randomized, so the
// reported worst cases are a lower bound on any violation.
struct IsometryReport {
  Index subset_size = 0;
  long trials = 0;
  double min_singular_over_sqrt_m = 0.0;
  double max_singular_over_sqrt_m = 0.0;
  double eps = 0.0;
  // J = [m] reference values.
  double full_min_singular = 0.0;
  double full_max_singular = 0.0;
};

IsometryReport check_isometry(const Dataset& data, const std::vector<Index>& V,
                              double eps, long trials, Rng& rng);

// Min-l1 recovery over {x : ||Ax - y|| <= eps} for adversarially perturbed
// data. eps = 0 is handled with a hair of slack so the ball stays valid.
Eigen::VectorXd adversarial_recover(const Dataset& data, double eps);

struct LassoResult {
  Eigen::VectorXd x;
  long iters = 0;
  bool converged = false;
  double grad_map_norm = 0.0;
};

// Ordinary l1-regularized least squares (1/2m)||Ax-y||^2 + lambda||x||_1 by
// proximal gradient with backtracking; the truncation-blind baseline.
LassoResult naive_lasso(const Dataset& data, double lambda, double tol = 1e-8,
                        long max_iters = 200000);

// F1 score of the detected support {i : |estimate_i| > 0.1} against the true
// support; 1.0 when both are empty.
double support_f1(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

struct SweepCell {
  Index m = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double l2_error = 0.0;
  double l1_error = 0.0;
  double support_f1 = 0.0;
  double naive_l2_error = 0.0;
  double runtime_ms = 0.0;
};

struct SweepFit {
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  SweepFit fit;  // log median error vs log m
  std::vector<double> median_errors;       // one per m value
  std::vector<double> naive_median_errors; // one per m value
  std::vector<Index> m_values;
};

struct SweepConfig {
  Index n = 200;
  Index k = 5;
  TruncationSet set{{{0.0, std::numeric_limits<double>::infinity()}}};
  std::vector<Index> m_values;
  std::vector<std::uint64_t> seeds;
  SolverConfig solver;
  bool run_naive = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Error scaling across the (m, seed) grid at fixed (n, k, set). Cells run
// concurrently; results are merged in grid order. Individual cell failures
// are recorded and do not stop the sweep.
SweepResult error_sweep(const SweepConfig& config);

void write_sweep_csv(const SweepResult& result,
                     const std::filesystem::path& file);
nlohmann::json sweep_summary(const SweepResult& result);

}  // namespace trl
