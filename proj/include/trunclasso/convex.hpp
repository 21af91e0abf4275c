#pragma once

#include <Eigen/Core>

#include "trunclasso/errors.hpp"

namespace trl {

using Index = Eigen::Index;

// The feasible set {x : ||Ax - y||_2 <= radius}, with a singular value
// decomposition of A computed once at construction and reused by every
// projection. Immutable after construction and safe to share.
class ResidualBall {
 public:
  ResidualBall(Eigen::MatrixXd A, Eigen::VectorXd y, double radius);

  Index m() const { return A_.rows(); }
  Index n() const { return A_.cols(); }
  double radius() const { return radius_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& y() const { return y_; }

  double residual_norm(const Eigen::VectorXd& x) const {
    return (A_ * x - y_).norm();
  }

  // Euclidean projection onto the ball. Interior points are returned
  // unchanged (bit-identically); boundary projections solve the scalar dual
  // equation by safeguarded Newton/bisection on the cached SVD.
  Eigen::VectorXd project(const Eigen::VectorXd& v, double tol = 1e-10) const;

  // SVD coordinate access for iterative solvers that track c = V^T x.
  const Eigen::MatrixXd& svd_v() const { return V_; }
  const Eigen::MatrixXd& svd_u() const { return U_; }
  const Eigen::VectorXd& sigma() const { return sigma_; }
  // d = U^T y and rho = ||y - U d||: the part of y outside the column space.
  const Eigen::VectorXd& d() const { return d_; }
  double min_residual() const { return rho_; }

  double coord_residual_sq(const Eigen::VectorXd& c) const {
    return (sigma_.cwiseProduct(c) - d_).squaredNorm() + rho_ * rho_;
  }

  // Shrink coordinates c (with residual above the radius) onto the boundary;
  // returns the dual multiplier nu. The updated c satisfies
  // coord_residual_sq(c) <= (radius * (1 + 1e-9))^2.
  double project_coords(Eigen::VectorXd& c, double tol = 1e-10) const;

  // Minimum-norm least-squares coordinates (pseudo-inverse applied to y).
  Eigen::VectorXd least_squares_coords() const;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd y_;
  double radius_;
  Eigen::MatrixXd U_, V_;
  Eigen::VectorXd sigma_, d_;
  double rho_;
};

struct MinL1Result {
  Eigen::VectorXd x;
  double l1 = 0.0;
  double gap = 0.0;
  long iters = 0;
  bool converged = false;
};

// min ||x||_1 over the ball, by Douglas-Rachford splitting of the l1 term
// and the ball indicator: soft-thresholding alternated with project(), with
// over-relaxation. Stops on a duality-gap certificate; on iteration
// exhaustion the best feasible iterate and its gap are returned with
// converged = false. max_iters < 0 selects the default 50 * n.
MinL1Result min_l1(const ResidualBall& ball, double tol = 1e-8,
                   long max_iters = -1);

}  // namespace trl
