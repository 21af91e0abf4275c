#include "trunclasso/analysis.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "trunclasso/convex.hpp"
#include "trunclasso/errors.hpp"

namespace trl {

namespace {

std::pair<double, double> extreme_singulars(const Eigen::MatrixXd& M) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  return {s[s.size() - 1], s[0]};
}

}  // namespace

IsometryReport check_isometry(const Dataset& data, const std::vector<Index>& V,
                              double eps, long trials, Rng& rng) {
  if (V.empty() || static_cast<Index>(V.size()) > data.n())
    throw ParseError("check_isometry: bad column subset size");
  if (!(eps > 0.0 && eps <= 1.0))
    throw ParseError("check_isometry: eps must be in (0,1]");

  const Index m = data.m();
  Eigen::MatrixXd AV(m, static_cast<Index>(V.size()));
  for (std::size_t j = 0; j < V.size(); ++j)
    AV.col(static_cast<Index>(j)) = data.A.col(V[j]);

  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  IsometryReport report;
  report.eps = eps;
  report.trials = trials;
  report.subset_size = static_cast<Index>(
      std::ceil(eps * static_cast<double>(m)));

  auto [fmin, fmax] = extreme_singulars(AV);
  report.full_min_singular = fmin * inv_sqrt_m;
  report.full_max_singular = fmax * inv_sqrt_m;
  report.min_singular_over_sqrt_m = report.full_min_singular;
  report.max_singular_over_sqrt_m = report.full_max_singular;

  std::vector<Index> idx(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd AJ(report.subset_size, AV.cols());
  for (long t = 0; t < trials; ++t) {
    // Partial Fisher-Yates draw of |J| distinct rows.
    for (Index i = 0; i < report.subset_size; ++i) {
      const Index j = i + static_cast<Index>(rng.below(
                              static_cast<std::uint64_t>(m - i)));
      std::swap(idx[static_cast<std::size_t>(i)],
                idx[static_cast<std::size_t>(j)]);
    }
    for (Index i = 0; i < report.subset_size; ++i)
      AJ.row(i) = AV.row(idx[static_cast<std::size_t>(i)]);
    auto [smin, smax] = extreme_singulars(AJ);
    report.min_singular_over_sqrt_m =
        std::min(report.min_singular_over_sqrt_m, smin * inv_sqrt_m);
    report.max_singular_over_sqrt_m =
        std::max(report.max_singular_over_sqrt_m, smax * inv_sqrt_m);
  }
  return report;
}

Eigen::VectorXd adversarial_recover(const Dataset& data, double eps) {
  if (eps < 0.0) throw ParseError("adversarial_recover: eps must be >= 0");
  const double radius =
      std::max(eps, 1e-8 * std::max(1.0, data.y.norm()));
  ResidualBall ball(data.A, data.y, radius);
  return min_l1(ball, 1e-9, 100 * data.n()).x;
}

LassoResult naive_lasso(const Dataset& data, double lambda, double tol,
                        long max_iters) {
  if (lambda < 0.0) throw ParseError("naive_lasso: lambda must be >= 0");
  const double inv_m = 1.0 / static_cast<double>(data.m());
  auto f = [&](const Eigen::VectorXd& x) {
    return 0.5 * inv_m * (data.A * x - data.y).squaredNorm();
  };
  auto soft = [](const Eigen::VectorXd& v, double thr) {
    return v.unaryExpr([thr](double vi) {
      return vi > thr ? vi - thr : (vi < -thr ? vi + thr : 0.0);
    });
  };

  LassoResult res;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(data.n());
  double L = 1.0;
  double fx = f(x);
  for (; res.iters < max_iters; ++res.iters) {
    const Eigen::VectorXd grad = inv_m * (data.A.transpose() * (data.A * x - data.y));
    Eigen::VectorXd xn;
    // Backtracking on the smooth part's quadratic model.
    for (int bt = 0; bt < 100; ++bt) {
      xn = soft(x - grad / L, lambda / L);
      const Eigen::VectorXd dx = xn - x;
      if (f(xn) <= fx + grad.dot(dx) + 0.5 * L * dx.squaredNorm() + 1e-15)
        break;
      L *= 2.0;
    }
    res.grad_map_norm = (L * (x - xn)).norm();
    x = xn;
    fx = f(x);
    if (res.grad_map_norm <= tol) {
      res.converged = true;
      ++res.iters;
      break;
    }
    L = std::max(L * 0.95, 1e-8);
  }
  res.x = x;
  return res;
}

double support_f1(const Eigen::VectorXd& estimate,
                  const Eigen::VectorXd& truth) {
  // Fixed detection threshold, adequate for the +/-1 spike benchmarks.
  const double thr = 0.1;
  long tp = 0, fp = 0, fn = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    const bool est = std::abs(estimate[i]) > thr;
    const bool tru = truth[i] != 0.0;
    tp += est && tru;
    fp += est && !tru;
    fn += !est && tru;
  }
  if (2 * tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) /
         static_cast<double>(2 * tp + fp + fn);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void run_cell(const SweepConfig& config, Index m, std::uint64_t seed,
              SweepCell& cell) {
  cell.m = m;
  cell.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Rng xr = Rng::stream(seed, "sweep/xstar");
    const Eigen::VectorXd xs = spike_vector(config.n, config.k, xr);
    const std::uint64_t data_seed =
        Rng::splitmix64(Rng::splitmix64(seed) ^ static_cast<std::uint64_t>(m));
    auto data = generate_truncated(xs, config.set, m, data_seed);

    SolverConfig sc = config.solver;
    sc.seed = Rng::splitmix64(data_seed ^ 0x5eedu);
    auto report = solve(data, sc);
    cell.l2_error = (report.x_bar - xs).norm();
    cell.l1_error = (report.x_bar - xs).lpNorm<1>();
    cell.support_f1 = support_f1(report.x_bar, xs);

    if (config.run_naive) {
      const double lambda = resolve_lambda(sc, m, config.n);
      auto base = naive_lasso(data, lambda);
      cell.naive_l2_error = (base.x - xs).norm();
    }
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t0)
          .count();
}

SweepFit fit_loglog(const std::vector<Index>& ms,
                    const std::vector<double>& errs) {
  SweepFit fit;
  if (ms.size() < 2) return fit;
  for (double e : errs)
    if (!(e > 1e-12)) return fit;  // degenerate, slope fit skipped
  const std::size_t n = ms.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(static_cast<double>(ms[i]));
    const double y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = sxx - sx * sx / n;
  fit.slope = (sxy - sx * sy / n) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(static_cast<double>(ms[i]));
    const double y = std::log(errs[i]);
    const double r = y - fit.slope * x - fit.intercept;
    ss_res += r * r;
  }
  fit.slope_std_error =
      n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / denom) : 0.0;
  fit.valid = true;
  return fit;
}

}  // namespace

SweepResult error_sweep(const SweepConfig& config) {
  if (config.m_values.empty() || config.seeds.empty())
    throw ParseError("error_sweep: empty grid");
  SweepResult result;
  result.m_values = config.m_values;
  result.cells.resize(config.m_values.size() * config.seeds.size());
  for (std::size_t mi = 0; mi < config.m_values.size(); ++mi)
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
      auto& cell = result.cells[mi * config.seeds.size() + si];
      cell.m = config.m_values[mi];
      cell.seed = config.seeds[si];
    }

  unsigned threads = config.threads ? config.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, result.cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= result.cells.size()) return;
      run_cell(config, result.cells[i].m, result.cells[i].seed,
               result.cells[i]);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t mi = 0; mi < config.m_values.size(); ++mi) {
    std::vector<double> errs, naive;
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
      const auto& cell = result.cells[mi * config.seeds.size() + si];
      if (!cell.ok) continue;
      errs.push_back(cell.l2_error);
      naive.push_back(cell.naive_l2_error);
    }
    result.median_errors.push_back(errs.empty() ? 0.0 : median(errs));
    result.naive_median_errors.push_back(naive.empty() ? 0.0 : median(naive));
  }
  // A zero signal leaves only solver noise; a log-log fit is meaningless.
  if (config.k > 0)
    result.fit = fit_loglog(result.m_values, result.median_errors);
  return result;
}

void write_sweep_csv(const SweepResult& result,
                     const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw ParseError("cannot write " + file.string());
  os << "m,seed,l2_error,l1_error,support_f1,runtime_ms\n";
  for (const auto& c : result.cells) {
    os << c.m << ',' << c.seed << ',' << c.l2_error << ',' << c.l1_error << ','
       << c.support_f1 << ',' << c.runtime_ms << '\n';
  }
}

nlohmann::json sweep_summary(const SweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"m", c.m},
                     {"seed", c.seed},
                     {"ok", c.ok},
                     {"l2_error", c.l2_error},
                     {"naive_l2_error", c.naive_l2_error}});
    if (!c.ok) cells.back()["error"] = c.error;
  }
  return {{"m_values", result.m_values},
          {"median_errors", result.median_errors},
          {"naive_median_errors", result.naive_median_errors},
          {"fit",
           {{"valid", result.fit.valid},
            {"slope", result.fit.slope},
            {"intercept", result.fit.intercept},
            {"slope_std_error", result.fit.slope_std_error}}},
          {"cells", cells}};
}

}  // namespace trl
