#include "trunclasso/psgd.hpp"

#include <chrono>
#include <cmath>

#include "trunclasso/errors.hpp"

namespace trl {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
}

double nll(const Eigen::VectorXd& x, const Dataset& data) {
  double acc = 0.0;
  for (Index j = 0; j < data.m(); ++j) {
    const double t = data.A.row(j).dot(x);
    const double g = survival(data.set, t);
    if (g < 1e-300)
      throw NumericalUnderflow("nll: survival underflow", j);
    const double r = t - data.y[j];
    acc += 0.5 * r * r + kLogSqrt2Pi + std::log(g);
  }
  return acc / static_cast<double>(data.m());
}

Eigen::VectorXd nll_gradient(const Eigen::VectorXd& x, const Dataset& data) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(data.n());
  for (Index j = 0; j < data.m(); ++j) {
    const double t = data.A.row(j).dot(x);
    TruncatedGaussianView view(t, data.set);
    if (view.mass() < 1e-300)
      throw NumericalUnderflow("nll_gradient: survival underflow", j);
    grad += (trunc_mean(view) - data.y[j]) * data.A.row(j).transpose();
  }
  return grad / static_cast<double>(data.m());
}

namespace {

// One stochastic draw: row index j and the sampled residual z - y_j.
struct StepDraw {
  Index j;
  double s;
};

StepDraw draw_step(const Eigen::VectorXd& x, const Dataset& data, Rng& rng) {
  const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(data.m())));
  const double t = data.A.row(j).dot(x);
  TruncatedGaussianView view(t, data.set);
  const double z = sample(view, rng);
  return {j, z - data.y[j]};
}

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x,
                                    const Dataset& data, double lambda,
                                    Rng& rng) {
  const StepDraw d = draw_step(x, data, rng);
  Eigen::VectorXd v = d.s * data.A.row(d.j).transpose();
  if (lambda != 0.0)
    v += lambda * x.unaryExpr([](double xi) { return sign0(xi); });
  return v;
}

double resolve_lambda(const SolverConfig& config, Index m, Index n) {
  if (config.lambda >= 0.0) return config.lambda;
  return config.sigma * std::sqrt(std::log(static_cast<double>(n)) /
                                  static_cast<double>(m));
}

double resolve_radius(const SolverConfig& config, const Dataset& data) {
  if (config.radius > 0.0) return config.radius;
  // Acceptance rate of the generating process stands in for the survival
  // constant; an untruncated or adversarial dataset has rejected_count 0.
  // The default tracks the truncated-noise scale sqrt(2 log(1/alpha) + 2):
  // wide enough that the true parameter stays feasible, tight enough that
  // the ball actually constrains the iterates.
  const double trials =
      static_cast<double>(data.m() + std::max(data.rejected_count, 0L));
  const double alpha_hat =
      std::max(static_cast<double>(data.m()) / trials, 1e-4);
  return std::sqrt(2.0 * std::log(1.0 / alpha_hat) + 2.0);
}

RecoveryReport solve(const Dataset& data, const SolverConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const Index m = data.m();
  const Index n = data.n();

  const double lambda = resolve_lambda(config, m, n);
  const double r = resolve_radius(config, data);
  const long steps =
      config.steps > 0
          ? config.steps
          : static_cast<long>(200.0 * static_cast<double>(m) *
                              std::log(static_cast<double>(n)));
  const double eta = config.step_size > 0.0
                         ? config.step_size
                         : std::sqrt(1.0 / (static_cast<double>(n) *
                                            static_cast<double>(steps)));

  ResidualBall ball(data.A, data.y, r * std::sqrt(static_cast<double>(m)));

  RecoveryReport report;
  report.lambda_used = lambda;
  report.radius_used = r;
  report.steps_used = steps;
  report.step_size_used = eta;
  report.seed = config.seed;

  auto init = min_l1(ball);
  report.x_init = init.x;
  report.diag.init_converged = init.converged;
  report.diag.init_gap = init.gap;
  report.diag.init_iters = init.iters;

  Rng rng = Rng::stream(config.seed, "psgd");

  Eigen::VectorXd x = init.x;
  Eigen::VectorXd c = ball.svd_v().transpose() * x;
  Eigen::VectorXd xbar_acc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sign_x(n), vt_v(n), c0(c.size());
  const double radius_sq = ball.radius() * ball.radius();
  double step_sq_acc = 0.0;

  const long trace_every =
      config.record_trace && config.trace_points > 0
          ? std::max(steps / config.trace_points, 1L)
          : 0;

  for (long t = 0; t < steps; ++t) {
    xbar_acc += x;
    const StepDraw d = draw_step(x, data, rng);
    for (Index i = 0; i < n; ++i) sign_x[i] = sign0(x[i]);
    // v = s A_j^T + lambda sign(x); track both x and c = V^T x.
    vt_v = lambda * (ball.svd_v().transpose() * sign_x);
    vt_v.noalias() +=
        d.s * ball.sigma().cwiseProduct(ball.svd_u().row(d.j).transpose());
    step_sq_acc += d.s * d.s * data.A.row(d.j).squaredNorm() +
                   2.0 * lambda * d.s * data.A.row(d.j).dot(sign_x) +
                   lambda * lambda * sign_x.squaredNorm();
    x.noalias() -= eta * d.s * data.A.row(d.j).transpose();
    x.noalias() -= (eta * lambda) * sign_x;
    c.noalias() -= eta * vt_v;
    if (ball.coord_residual_sq(c) > radius_sq) {
      c0 = c;
      ball.project_coords(c);
      x.noalias() += ball.svd_v() * (c - c0);
      ++report.diag.projections;
    }
    // Re-sync the tracked coordinates against drift from incremental updates.
    if ((t & 0xffff) == 0xffff) c.noalias() = ball.svd_v().transpose() * x;
    if (trace_every > 0 && ((t + 1) % trace_every == 0 || t + 1 == steps)) {
      const Eigen::VectorXd avg = xbar_acc / static_cast<double>(t + 1);
      report.objective_trace.push_back(nll(avg, data) + lambda * avg.lpNorm<1>());
    }
  }

  report.x_bar = xbar_acc / static_cast<double>(steps);
  report.feasibility_residual = ball.residual_norm(report.x_bar);
  report.l1_norm = report.x_bar.lpNorm<1>();
  report.mean_step_sq = step_sq_acc / static_cast<double>(steps);
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Index>(v.size()));
}

}  // namespace

nlohmann::json report_to_json(const RecoveryReport& report) {
  return {{"x_bar", to_std(report.x_bar)},
          {"x_init", to_std(report.x_init)},
          {"objective_trace", report.objective_trace},
          {"feasibility_residual", report.feasibility_residual},
          {"l1_norm", report.l1_norm},
          {"wall_time_sec", report.wall_time_sec},
          {"lambda", report.lambda_used},
          {"radius", report.radius_used},
          {"steps", report.steps_used},
          {"step_size", report.step_size_used},
          {"seed", report.seed},
          {"mean_step_sq", report.mean_step_sq},
          {"init_converged", report.diag.init_converged},
          {"init_gap", report.diag.init_gap},
          {"init_iters", report.diag.init_iters},
          {"projections", report.diag.projections}};
}

RecoveryReport report_from_json(const nlohmann::json& j) {
  RecoveryReport r;
  r.x_bar = from_std(j.at("x_bar").get<std::vector<double>>());
  r.x_init = from_std(j.at("x_init").get<std::vector<double>>());
  r.objective_trace = j.value("objective_trace", std::vector<double>{});
  r.feasibility_residual = j.at("feasibility_residual").get<double>();
  r.l1_norm = j.at("l1_norm").get<double>();
  r.wall_time_sec = j.value("wall_time_sec", 0.0);
  r.lambda_used = j.at("lambda").get<double>();
  r.radius_used = j.at("radius").get<double>();
  r.steps_used = j.at("steps").get<long>();
  r.step_size_used = j.at("step_size").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mean_step_sq = j.value("mean_step_sq", 0.0);
  r.diag.init_converged = j.value("init_converged", true);
  r.diag.init_gap = j.value("init_gap", 0.0);
  r.diag.init_iters = j.value("init_iters", 0L);
  r.diag.projections = j.value("projections", 0L);
  return r;
}

}  // namespace trl
