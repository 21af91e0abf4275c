#include "trunclasso/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "trunclasso/errors.hpp"

namespace trl {

namespace {

// Rejection budget: abort once trials exceed 1e4 * m / max(alpha_hat, 1e-4),
// with alpha_hat the running acceptance estimate.
bool budget_exceeded(long trials, long accepted, Index m) {
  if (trials < 1024) return false;
  const double alpha_hat =
      std::max(static_cast<double>(accepted) / static_cast<double>(trials), 1e-4);
  return static_cast<double>(trials) > 1e4 * static_cast<double>(m) / alpha_hat;
}

}  // namespace

Dataset generate_truncated(const Eigen::VectorXd& x_star,
                           const TruncationSet& set, Index m,
                           std::uint64_t seed) {
  if (m < 1) throw ParseError("generate_truncated: m must be >= 1");
  const Index n = x_star.size();
  if (n < 1) throw ParseError("generate_truncated: n must be >= 1");
  if (!x_star.allFinite())
    throw ParseError("generate_truncated: x_star must be finite");

  Rng rng = Rng::stream(seed, "datagen/truncated");
  Dataset out{Eigen::MatrixXd(m, n), Eigen::VectorXd(m), x_star, set, seed, 0};

  Eigen::VectorXd row(n);
  Index kept = 0;
  long trials = 0;
  while (kept < m) {
    for (Index j = 0; j < n; ++j) row[j] = rng.normal();
    const double eta = rng.normal();
    const double y = row.dot(x_star) + eta;
    ++trials;
    if (set.contains(y)) {
      out.A.row(kept) = row.transpose();
      out.y[kept] = y;
      ++kept;
    } else {
      ++out.rejected_count;
      if (budget_exceeded(trials, kept, m))
        throw SurvivalTooLow(
            "generate_truncated: rejection budget exhausted; survival "
            "probability appears vanishing for this set");
    }
  }
  return out;
}

Dataset generate_adversarial(const Eigen::VectorXd& x_star,
                             const Eigen::VectorXd& noise, std::uint64_t seed) {
  const Index m = noise.size();
  const Index n = x_star.size();
  if (m < 1 || n < 1) throw ParseError("generate_adversarial: m, n must be >= 1");
  Rng rng = Rng::stream(seed, "datagen/adversarial");
  Dataset out{Eigen::MatrixXd(m, n), Eigen::VectorXd(m), x_star,
              TruncationSet({{-std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()}}),
              seed, 0};
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) out.A(i, j) = rng.normal();
  out.y = out.A * x_star + noise;
  return out;
}

AlphaEstimate estimate_alpha(const Eigen::VectorXd& x_star,
                             const TruncationSet& set, long trials,
                             std::uint64_t seed) {
  if (trials < 1) throw ParseError("estimate_alpha: trials must be >= 1");
  Rng rng = Rng::stream(seed, "datagen/alpha");
  const Index n = x_star.size();
  double sum = 0.0, sumsq = 0.0;
  Eigen::VectorXd a(n);
  for (long i = 0; i < trials; ++i) {
    for (Index j = 0; j < n; ++j) a[j] = rng.normal();
    const double g = survival(set, a.dot(x_star));
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / static_cast<double>(trials);
  const double var =
      std::max(sumsq / static_cast<double>(trials) - mean * mean, 0.0);
  const double se =
      trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
  return {mean, se};
}

Eigen::VectorXd spike_vector(Index n, Index k, Rng& rng) {
  if (k > n) throw ParseError("spike_vector: k must be <= n");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<Index> idx(n);
  for (Index i = 0; i < n; ++i) idx[i] = i;
  for (Index i = 0; i < k; ++i) {
    const Index j = i + static_cast<Index>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    x[idx[i]] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  return x;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void write_matrix_csv(const std::filesystem::path& file,
                      const Eigen::MatrixXd& m) {
  std::ofstream os(file);
  if (!os) throw ParseError("cannot write " + file.string());
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      append_double(line, m(i, j));
    }
    line += '\n';
    os << line;
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ParseError("cannot read " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc())
        throw ParseError("bad number in " + file.string());
      row.push_back(v);
      p = res.ptr;
      if (p < end && *p == ',') ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged rows in " + file.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix in " + file.string());
  Eigen::MatrixXd m(static_cast<Index>(rows.size()),
                    static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "A.csv", data.A);
  write_matrix_csv(dir / "y.csv", data.y);
  if (data.x_star) write_matrix_csv(dir / "xstar.csv", *data.x_star);
  nlohmann::json meta{{"m", data.m()},
                      {"n", data.n()},
                      {"seed", data.seed},
                      {"set", data.set.str()},
                      {"rejected_count", data.rejected_count}};
  std::ofstream os(dir / "meta.json");
  if (!os) throw ParseError("cannot write meta.json");
  os << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir, bool with_xstar) {
  std::ifstream is(dir / "meta.json");
  if (!is) throw ParseError("cannot read " + (dir / "meta.json").string());
  nlohmann::json meta = nlohmann::json::parse(is);
  Dataset out{read_matrix_csv(dir / "A.csv"), read_matrix_csv(dir / "y.csv"),
              std::nullopt, TruncationSet::parse(meta.at("set").get<std::string>()),
              meta.at("seed").get<std::uint64_t>(),
              meta.at("rejected_count").get<long>()};
  if (out.m() != meta.at("m").get<Index>() || out.n() != meta.at("n").get<Index>())
    throw ParseError("meta.json dimensions do not match CSV contents");
  if (with_xstar && std::filesystem::exists(dir / "xstar.csv"))
    out.x_star = Eigen::VectorXd(read_matrix_csv(dir / "xstar.csv"));
  return out;
}

}  // namespace trl
