#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "trunclasso/convex.hpp"
#include "trunclasso/datagen.hpp"
#include "trunclasso/rng.hpp"

namespace trl {

// Configuration for the projected-SGD solver. Negative values select the
// data-driven defaults:
//   lambda    = sigma * sqrt(log(n) / m)
//   radius    = sqrt(2 log(1 / alpha_hat) + 2), alpha_hat from the
//               generator's acceptance rate recorded in the dataset
//   steps     = 200 * m * log(n)
//   step_size = sqrt(1 / (n * steps))
struct SolverConfig {
  double sigma = 2.0;
  double lambda = -1.0;
  double radius = -1.0;
  long steps = -1;
  double step_size = -1.0;
  std::uint64_t seed = 0;
  bool record_trace = false;
  long trace_points = 50;
};

struct SubsolverDiag {
  bool init_converged = true;
  double init_gap = 0.0;
  long init_iters = 0;
  long projections = 0;
};

struct RecoveryReport {
  Eigen::VectorXd x_bar;
  Eigen::VectorXd x_init;
  std::vector<double> objective_trace;
  double feasibility_residual = 0.0;
  double l1_norm = 0.0;
  double wall_time_sec = 0.0;
  // Resolved configuration actually used by the run.
  double lambda_used = 0.0;
  double radius_used = 0.0;
  long steps_used = 0;
  double step_size_used = 0.0;
  std::uint64_t seed = 0;
  // Running mean of ||v||^2 over the iterations.
  double mean_step_sq = 0.0;
  SubsolverDiag diag;
};

// Sample negative log-likelihood (1/m) sum_j [ (A_j x - y_j)^2 / 2
// + log(sqrt(2 pi) gamma_S(A_j x)) ].
double nll(const Eigen::VectorXd& x, const Dataset& data);

// Gradient (1/m) sum_j A_j^T (mu_{A_j x} - y_j) via the truncated mean.
Eigen::VectorXd nll_gradient(const Eigen::VectorXd& x, const Dataset& data);

// One-sample stochastic subgradient: pick j uniformly, draw
// z ~ N(A_j x, 1; S), return A_j^T (z - y_j) + lambda * sign(x) with
// sign(0) = 0.
Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x,
                                    const Dataset& data, double lambda,
                                    Rng& rng);

// Projected SGD on the l1-regularized likelihood over the residual ball.
// Starts from the min-l1 feasible point, averages the first `steps` iterates.
RecoveryReport solve(const Dataset& data, const SolverConfig& config);

double resolve_lambda(const SolverConfig& config, Index m, Index n);
double resolve_radius(const SolverConfig& config, const Dataset& data);

nlohmann::json report_to_json(const RecoveryReport& report);
RecoveryReport report_from_json(const nlohmann::json& j);

}  // namespace trl
