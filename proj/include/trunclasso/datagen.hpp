#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "trunclasso/rng.hpp"
#include "trunclasso/tnormal.hpp"

namespace trl {

using Index = Eigen::Index;

// A truncated (or adversarial) regression sample set. Ground truth x_star is
// carried for harness use only and serialized as a sidecar file so solvers
// cannot read it by accident.
struct Dataset {
  Eigen::MatrixXd A;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> x_star;
  TruncationSet set;
  std::uint64_t seed = 0;
  long rejected_count = 0;

  Index m() const { return A.rows(); }
  Index n() const { return A.cols(); }
};

// Rejection process: rows a ~ N(0,1)^n and y = a.x* + eta, eta ~ N(0,1),
// kept only when y lands in the set. Deterministic given seed. Throws
// SurvivalTooLow when the acceptance rate makes the work budget hopeless.
Dataset generate_truncated(const Eigen::VectorXd& x_star,
                           const TruncationSet& set, Index m,
                           std::uint64_t seed);

// Arbitrary-noise variant: y = A x* + noise, no rejection.
Dataset generate_adversarial(const Eigen::VectorXd& x_star,
                             const Eigen::VectorXd& noise, std::uint64_t seed);

struct AlphaEstimate {
  double value;
  double std_error;
};

// Monte-Carlo estimate of E_a[gamma_S(a.x*)] using exact survival values per
// draw (no rejection involved).
AlphaEstimate estimate_alpha(const Eigen::VectorXd& x_star,
                             const TruncationSet& set, long trials,
                             std::uint64_t seed);

// k-sparse vector with +/-1 spikes on a random support.
Eigen::VectorXd spike_vector(Index n, Index k, Rng& rng);

// Directory layout: A.csv (row-major), y.csv, meta.json, optional xstar.csv.
// Floats are written with shortest round-trip decimals.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir, bool with_xstar = false);

}  // namespace trl
