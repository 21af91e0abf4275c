// Acceptance harness: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Pass --cli <path> to the trlasso binary for
// the determinism checks.
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "testutil.hpp"
#include "trunclasso/analysis.hpp"

using trl::Index;
using trl::Rng;
using trl::TruncationSet;

namespace {

const TruncationSet kHalfLine{{{0.0, std::numeric_limits<double>::infinity()}}};

Eigen::MatrixXd random_matrix(Index m, Index n, Rng& rng) {
  Eigen::MatrixXd a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a;
}

Eigen::VectorXd random_vector(Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---- criterion 1: truncated-Gaussian moments vs quadrature ----
bool criterion_moments(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const double t = testutil::random_location(rng);
    const auto set = testutil::random_set(rng, t);
    trl::TruncatedGaussianView view(t, set);
    const double mu = trl::trunc_mean(view);
    const double var = trl::trunc_var(view);
    const double mu_o = oracle::mean(set, t);
    const double var_o = oracle::variance(set, t);
    worst = std::max(worst, std::abs(mu - mu_o) / std::max(1.0, std::abs(mu_o)));
    worst = std::max(worst, std::abs(var - var_o) / std::max(1e-6, var_o));
    if (worst > 1e-8) {
      detail = "relative error " + fmt(worst) + " at case " + std::to_string(rep);
      return false;
    }
  }
  trl::TruncatedGaussianView half(0.0, kHalfLine);
  const double mu_err = std::abs(trl::trunc_mean(half) - std::sqrt(2.0 / M_PI));
  const double var_err = std::abs(trl::trunc_var(half) - (1.0 - 2.0 / M_PI));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  detail = "worst rel " + fmt(worst) + ", half-line err " +
           fmt(std::max(mu_err, var_err)) + ", " + fmt(secs) + "s";
  return mu_err <= 1e-10 && var_err <= 1e-10 && secs < 10.0;
}

// ---- criterion 2: d mu / dt = Var(Z_t) ----
bool criterion_derivative(std::string& detail) {
  Rng rng(103);
  const double h = 1e-5;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double t = testutil::random_location(rng);
    const auto set = testutil::random_set(rng, t, 1e-3);
    trl::TruncatedGaussianView vm(t - h, set), vp(t + h, set), v(t, set);
    const double fd =
        (trl::trunc_mean(vp) - trl::trunc_mean(vm)) / (2.0 * h);
    const double var = trl::trunc_var(v);
    worst = std::max(worst, std::abs(fd - var) / std::max(1e-6, var));
  }
  detail = "worst rel " + fmt(worst);
  return worst <= 1e-4;
}

// ---- criterion 3: survival lemmas ----
bool criterion_lemmas(std::string& detail) {
  Rng rng(107);
  int violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double t = testutil::random_location(rng);
    const double ts = testutil::random_location(rng);
    const auto set = testutil::random_set(rng, ts, 1e-4);
    const double g_t = trl::survival(set, t);
    const double g_ts = trl::survival(set, ts);
    if (g_t <= 0.0 || g_ts <= 0.0) {
      ++violations;
      continue;
    }
    const double lhs17 = std::log(1.0 / g_t);
    const double rhs17 =
        2.0 * std::log(1.0 / g_ts) + (t - ts) * (t - ts) + 2.0;
    if (lhs17 > rhs17 + 1e-9) ++violations;
    trl::TruncatedGaussianView view(t, set);
    const double mu = trl::trunc_mean(view);
    const double er2 = trl::trunc_var(view) + (mu - t) * (mu - t);
    if (er2 > 2.0 * std::log(1.0 / g_t) + 4.0 + 1e-9) ++violations;
  }
  detail = std::to_string(violations) + " violations / 1000 triples";
  return violations == 0;
}

// ---- criterion 4: sampler KS ----
bool criterion_sampler(std::string& detail) {
  Rng rng(109);
  const std::size_t n = 100000;
  const double crit = testutil::ks_critical(0.001, n);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const double t = testutil::random_location(rng);
    const auto set = testutil::random_set(rng, t, 1e-3);
    trl::TruncatedGaussianView view(t, set);
    Rng sr = Rng::stream(500 + rep, "acceptance/sampler");
    std::vector<double> samples(n);
    for (auto& s : samples) {
      s = trl::sample(view, sr);
      if (!set.contains(s)) {
        detail = "sample out of support at view " + std::to_string(rep);
        return false;
      }
    }
    const double d = testutil::ks_statistic(
        std::move(samples), [&](double x) { return trl::cdf(view, x); });
    worst = std::max(worst, d);
    if (d > crit) {
      detail = "KS " + fmt(d) + " > " + fmt(crit) + " at view " +
               std::to_string(rep);
      return false;
    }
  }
  detail = "worst KS " + fmt(worst) + " vs critical " + fmt(crit);
  return true;
}

// ---- criterion 5: gradients ----
bool criterion_gradient(std::string& detail) {
  Rng rng(113);
  const double h = 1e-6;
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    auto xs = trl::spike_vector(8, 3, rng);
    auto set = testutil::random_set(rng, 0.0, 1e-2);
    auto data = trl::generate_truncated(xs, set, 5, 700 + rep);
    Eigen::VectorXd x = 0.5 * random_vector(8, rng);
    Eigen::VectorXd grad = trl::nll_gradient(x, data);
    for (Index i = 0; i < 8; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (trl::nll(xp, data) - trl::nll(xm, data)) / (2.0 * h);
      worst = std::max(worst,
                       std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
    }
  }
  if (worst > 1e-5) {
    detail = "finite-difference rel " + fmt(worst);
    return false;
  }

  // Monte-Carlo mean of the stochastic subgradient on a 5x8 instance.
  auto xs = trl::spike_vector(8, 3, rng);
  auto data = trl::generate_truncated(xs, kHalfLine, 5, 719);
  Eigen::VectorXd x = 0.5 * random_vector(8, rng);
  const double lambda = 0.3;
  const int draws = 100000;
  Eigen::MatrixXd samples(8, draws);
  Rng sg(727);
  for (int i = 0; i < draws; ++i)
    samples.col(i) = trl::stochastic_gradient(x, data, lambda, sg);
  Eigen::VectorXd mean = samples.rowwise().mean();
  Eigen::VectorXd want = trl::nll_gradient(x, data) +
                         lambda * x.unaryExpr([](double v) {
                           return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
                         });
  double worst_z = 0.0;
  for (Index i = 0; i < 8; ++i) {
    const double sd = std::sqrt(
        (samples.row(i).array() - mean[i]).square().sum() / (draws - 1));
    worst_z = std::max(worst_z,
                       std::abs(mean[i] - want[i]) / (sd / std::sqrt(draws)));
  }
  detail = "FD rel " + fmt(worst) + ", MC worst z " + fmt(worst_z);
  return worst_z <= 4.0;
}

// Long-run penalty-method oracle for min ||x||_1 over ||Ax-y|| <= r.
Eigen::VectorXd min_l1_penalty_oracle(const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& y, double radius) {
  Eigen::VectorXd p = Eigen::VectorXd::Ones(A.cols()).normalized();
  double smax2 = 0.0;
  for (int i = 0; i < 200; ++i) {
    p = (A.transpose() * (A * p)).eval();
    smax2 = p.norm();
    p /= smax2;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  for (double mu : {1e2, 1e4, 1e6, 1e8, 1e10}) {
    const double L = mu * smax2;
    Eigen::VectorXd z = x;
    double tk = 1.0;
    for (long it = 0; it < 400000; ++it) {
      Eigen::VectorXd r = A * z - y;
      const double nr = r.norm();
      Eigen::VectorXd g = Eigen::VectorXd::Zero(A.cols());
      if (nr > radius) g = mu * ((nr - radius) / nr) * (A.transpose() * r);
      Eigen::VectorXd xn = (z - g / L).unaryExpr([&](double v) {
        const double thr = 1.0 / L;
        return v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
      });
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      z = xn + ((tk - 1.0) / tn) * (xn - x);
      const double move = (xn - x).norm();
      x = xn;
      tk = tn;
      if (move < 1e-14) break;
    }
  }
  return x;
}

// ---- criterion 6: convex subsolvers ----
bool criterion_convex(std::string& detail) {
  Rng rng(127);
  for (int rep = 0; rep < 100; ++rep) {
    auto A = random_matrix(6, 9, rng);
    auto y = random_vector(6, rng);
    const double radius = 0.25 * y.norm() + 0.01;
    trl::ResidualBall ball(A, y, radius);
    Eigen::VectorXd u = 3.0 * random_vector(9, rng);
    Eigen::VectorXd v = 3.0 * random_vector(9, rng);
    Eigen::VectorXd pu = ball.project(u);
    Eigen::VectorXd pv = ball.project(v);
    if (ball.residual_norm(pu) > radius * (1.0 + 1e-9) ||
        (ball.project(pu) - pu).norm() > 1e-9 ||
        (pu - pv).norm() > (u - v).norm() + 1e-9) {
      detail = "projection property violated at instance " + std::to_string(rep);
      return false;
    }
    if (ball.residual_norm(u) > radius * (1.0 + 1e-6)) {
      Eigen::VectorXd lhs = pu - u;
      Eigen::VectorXd rhs = -(A.transpose() * (A * pu - y));
      const double cosang = lhs.dot(rhs) / (lhs.norm() * rhs.norm());
      if (cosang < std::cos(1e-6)) {
        detail = "KKT collinearity violated at instance " + std::to_string(rep);
        return false;
      }
    }
  }

  double worst = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    auto A = random_matrix(5, 8, rng);
    auto y = random_vector(5, rng);
    const double radius = 0.3 * y.norm() + 0.05;
    trl::ResidualBall ball(A, y, radius);
    auto res = trl::min_l1(ball, 1e-11, 200000);
    Eigen::VectorXd want = min_l1_penalty_oracle(A, y, radius);
    worst = std::max(worst, (res.x - want).norm());
  }
  if (worst > 1e-6) {
    detail = "min_l1 vs penalty oracle " + fmt(worst);
    return false;
  }

  Rng xr(131);
  Eigen::VectorXd xs = trl::spike_vector(100, 3, xr);
  auto data = trl::generate_adversarial(xs, Eigen::VectorXd::Zero(40), 733);
  trl::ResidualBall ball(data.A, data.y, 1e-6 * std::sqrt(40.0));
  auto res = trl::min_l1(ball, 1e-10, 40000);
  const double rec = (res.x - xs).norm();
  detail = "oracle gap " + fmt(worst) + ", exact-recovery err " + fmt(rec);
  return rec <= 1e-4;
}

// ---- criterion 7: end-to-end recovery sweep ----
bool criterion_recovery(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  trl::SweepConfig config;
  config.n = 200;
  config.k = 5;
  config.set = kHalfLine;
  config.m_values = {250, 500, 1000, 2000};
  config.seeds = {1, 2, 3, 4, 5};
  auto result = trl::error_sweep(config);
  for (const auto& cell : result.cells)
    if (!cell.ok) {
      detail = "cell m=" + std::to_string(cell.m) + " failed: " + cell.error;
      return false;
    }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  bool decreasing = true;
  for (std::size_t i = 1; i < result.median_errors.size(); ++i)
    if (!(result.median_errors[i] < result.median_errors[i - 1]))
      decreasing = false;
  const bool slope_ok =
      result.fit.valid && result.fit.slope >= -0.65 && result.fit.slope <= -0.35;
  bool beats_naive = true;
  for (std::size_t i = 0; i < result.median_errors.size(); ++i)
    if (!(result.median_errors[i] < result.naive_median_errors[i]))
      beats_naive = false;

  std::ostringstream os;
  os << "medians";
  for (double e : result.median_errors) os << ' ' << fmt(e);
  os << ", naive";
  for (double e : result.naive_median_errors) os << ' ' << fmt(e);
  os << ", slope " << fmt(result.fit.slope) << ", " << fmt(secs) << "s"
     << "; decreasing " << (decreasing ? "yes" : "NO") << ", slope-in-band "
     << (slope_ok ? "yes" : "NO") << ", beats-naive "
     << (beats_naive ? "yes" : "NO");
  detail = os.str();
  return decreasing && slope_ok && beats_naive && secs < 1800.0;
}

// ---- criterion 8: adversarial noise ----
bool criterion_adversarial(std::string& detail) {
  const Index k = 3, n = 100, m = 50 * k;
  Rng xr(137);
  Eigen::VectorXd xs = trl::spike_vector(n, k, xr);
  Rng nr(139);
  Eigen::VectorXd dir = random_vector(m, nr).normalized();

  auto noiseless = trl::generate_adversarial(xs, Eigen::VectorXd::Zero(m), 751);
  const double exact = (trl::adversarial_recover(noiseless, 0.0) - xs).norm();
  if (exact > 1e-4) {
    detail = "eps=0 error " + fmt(exact);
    return false;
  }
  std::vector<double> errs;
  for (double eps : {0.25, 0.5, 1.0}) {
    auto data = trl::generate_adversarial(xs, eps * dir, 751);
    errs.push_back((trl::adversarial_recover(data, eps) - xs).norm());
  }
  detail = "eps=0 err " + fmt(exact) + ", errors " + fmt(errs[0]) + " " +
           fmt(errs[1]) + " " + fmt(errs[2]);
  return errs[1] <= 3.0 * errs[0] + 1e-9 && errs[2] <= 3.0 * errs[1] + 1e-9;
}

// ---- criterion 9: isometry ----
bool criterion_isometry(std::string& detail) {
  Rng xr(149);
  Eigen::VectorXd xs = trl::spike_vector(200, 5, xr);
  auto data = trl::generate_truncated(xs, kHalfLine, 250, 757);
  std::vector<Index> U;
  for (Index i = 0; i < 200; ++i)
    if (xs[i] != 0.0) U.push_back(i);
  Rng rng(151);
  auto report = trl::check_isometry(data, U, 0.25, 20, rng);
  detail = "min " + fmt(report.min_singular_over_sqrt_m) + ", max " +
           fmt(report.max_singular_over_sqrt_m) + " over " +
           std::to_string(report.trials) + " subsets of size " +
           std::to_string(report.subset_size);
  return report.min_singular_over_sqrt_m > 0.1 &&
         report.max_singular_over_sqrt_m < 3.0;
}

// ---- criterion 10: CLI determinism ----
std::string g_cli;

int run(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool same_file(const std::filesystem::path& a, const std::filesystem::path& b) {
  return slurp(a) == slurp(b);
}

// Compare sweep CSVs ignoring the wall-clock runtime_ms column.
bool same_csv_no_runtime(const std::filesystem::path& a,
                         const std::filesystem::path& b) {
  std::istringstream sa(slurp(a)), sb(slurp(b));
  std::string la, lb;
  while (true) {
    const bool ga = static_cast<bool>(std::getline(sa, la));
    const bool gb = static_cast<bool>(std::getline(sb, lb));
    if (ga != gb) return false;
    if (!ga) return true;
    la.erase(la.find_last_of(','));
    lb.erase(lb.find_last_of(','));
    if (la != lb) return false;
  }
}

bool criterion_determinism(std::string& detail) {
  if (g_cli.empty()) {
    detail = "no --cli path given";
    return false;
  }
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "trlasso_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = "\"" + g_cli + "\"";
  const std::string r = root.string();
  auto sh = [&](const std::string& s) {
    if (run(s + " > /dev/null 2>&1") != 0) {
      detail = "command failed: " + s;
      return false;
    }
    return true;
  };

  for (const char* tag : {"a", "b"}) {
    const std::string d = r + "/" + tag;
    if (!sh(cli + " gen --n 40 --k 3 --m 200 --set '[0,inf]' --seed 7 --out " +
            d + "/data"))
      return false;
    if (!sh(cli + " solve --data " + d + "/data --steps 20000 --seed 9 --out " +
            d + "/report.json"))
      return false;
    if (run(cli + " eval --report " + d + "/report.json --data " + d +
            "/data > " + d + "/eval.json 2>/dev/null") != 0) {
      detail = "eval failed";
      return false;
    }
    if (run(cli + " check --data " + d + "/data --eps 0.25 --trials 5 --seed 2 > " +
            d + "/check.json 2>/dev/null") != 0) {
      detail = "check failed";
      return false;
    }
    if (run(cli + " sample --set '[-1,1],[2,inf]' --t 0.5 --count 1000 --seed 3 > " +
            d + "/samples.txt 2>/dev/null") != 0) {
      detail = "sample failed";
      return false;
    }
    if (!sh(cli + " sweep --n 20 --k 2 --set '[0,inf]' --m 50 --m 100"
                  " --seeds 1 --seeds 2 --steps 4000 --out " +
            d + "/sweep"))
      return false;
  }

  for (const char* f :
       {"data/A.csv", "data/y.csv", "data/meta.json", "data/xstar.csv",
        "report.json", "eval.json", "check.json", "samples.txt",
        "sweep/summary.json"}) {
    if (!same_file(root / "a" / f, root / "b" / f)) {
      detail = std::string("outputs differ: ") + f;
      return false;
    }
  }
  if (!same_csv_no_runtime(root / "a/sweep/sweep.csv",
                           root / "b/sweep/sweep.csv")) {
    detail = "outputs differ: sweep/sweep.csv";
    return false;
  }
  fs::remove_all(root);
  detail = "all commands byte-identical across two runs";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--cli" && i + 1 < argc) g_cli = argv[i + 1];

  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {"truncated-Gaussian analytics vs quadrature", criterion_moments},
      {"derivative identity d mu/dt = Var", criterion_derivative},
      {"survival inequalities", criterion_lemmas},
      {"sampler Kolmogorov-Smirnov", criterion_sampler},
      {"gradient correctness", criterion_gradient},
      {"convex subsolvers", criterion_convex},
      {"end-to-end recovery scaling", criterion_recovery},
      {"adversarial-noise recovery", criterion_adversarial},
      {"restricted isometry band", criterion_isometry},
      {"command determinism", criterion_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failures += !ok;
    std::printf("criterion %2zu: %s - %s (%s)\n", i + 1, ok ? "PASS" : "FAIL",
                criteria[i].name, detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
