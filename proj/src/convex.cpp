#include "trunclasso/convex.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace trl {

ResidualBall::ResidualBall(Eigen::MatrixXd A, Eigen::VectorXd y, double radius)
    : A_(std::move(A)), y_(std::move(y)), radius_(radius) {
  if (!(radius_ > 0.0)) throw ParseError("ResidualBall: radius must be > 0");
  if (A_.rows() != y_.size())
    throw ParseError("ResidualBall: A and y dimensions disagree");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A_,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw SingularFactorization("ResidualBall: SVD did not converge");
  U_ = svd.matrixU();
  V_ = svd.matrixV();
  sigma_ = svd.singularValues();
  d_ = U_.transpose() * y_;
  rho_ = std::sqrt(std::max(y_.squaredNorm() - d_.squaredNorm(), 0.0));
}

double ResidualBall::project_coords(Eigen::VectorXd& c, double tol) const {
  if (rho_ > radius_ * (1.0 + 1e-9))
    throw EmptyFeasibleSet("project: least-squares residual exceeds radius");
  const Eigen::VectorXd e = sigma_.cwiseProduct(c) - d_;
  const double target = radius_ * radius_;
  auto rsq = [&](double nu) {
    double s = rho_ * rho_;
    for (Index i = 0; i < e.size(); ++i) {
      const double den = 1.0 + nu * sigma_[i] * sigma_[i];
      s += e[i] * e[i] / (den * den);
    }
    return s;
  };
  auto drsq = [&](double nu) {
    double s = 0.0;
    for (Index i = 0; i < e.size(); ++i) {
      const double s2 = sigma_[i] * sigma_[i];
      const double den = 1.0 + nu * s2;
      s -= 2.0 * s2 * e[i] * e[i] / (den * den * den);
    }
    return s;
  };

  double lo = 0.0, hi = 1.0;
  while (rsq(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e30)
      throw EmptyFeasibleSet("project: dual variable diverged");
  }
  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = rsq(nu) - target;
    if (std::abs(std::sqrt(g + target) - radius_) <= tol * radius_ &&
        rsq(nu) <= target * (1.0 + 2e-9))
      break;
    if (g > 0.0)
      lo = nu;
    else
      hi = nu;
    const double dg = drsq(nu);
    double next = dg < 0.0 ? nu - g / dg : -1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    nu = next;
    if (hi - lo <= 1e-16 * hi) break;
  }
  // The hi end of the bracket is feasible; fall back to it if needed.
  if (rsq(nu) > target * (1.0 + 2e-9)) nu = hi;

  for (Index i = 0; i < c.size(); ++i)
    c[i] = (c[i] + nu * sigma_[i] * d_[i]) / (1.0 + nu * sigma_[i] * sigma_[i]);
  return nu;
}

Eigen::VectorXd ResidualBall::project(const Eigen::VectorXd& v,
                                      double tol) const {
  Eigen::VectorXd c = V_.transpose() * v;
  if (coord_residual_sq(c) <= radius_ * radius_) return v;
  const Eigen::VectorXd c0 = c;
  project_coords(c, tol);
  return v + V_ * (c - c0);
}

Eigen::VectorXd ResidualBall::least_squares_coords() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(sigma_.size());
  const double cutoff = sigma_.size() ? sigma_[0] * 1e-12 : 0.0;
  for (Index i = 0; i < sigma_.size(); ++i)
    if (sigma_[i] > cutoff) c[i] = d_[i] / sigma_[i];
  return c;
}

namespace {

// Duality gap certificate for min ||x||_1 s.t. ||Ax - y|| <= radius, using
// the dual max { y.l - radius ||l||_2 : ||A^T l||_inf <= 1 } with the
// candidate l built from the residual of a feasible point.
double l1_gap(const ResidualBall& ball, const Eigen::VectorXd& x) {
  const Eigen::VectorXd r = ball.y() - ball.A() * x;
  const double cinf = (ball.A().transpose() * r).lpNorm<Eigen::Infinity>();
  const double l1 = x.lpNorm<1>();
  if (cinf < 1e-300) return l1;
  const double dual = (ball.y().dot(r) - ball.radius() * r.norm()) / cinf;
  return l1 - std::max(dual, 0.0);
}

}  // namespace

MinL1Result min_l1(const ResidualBall& ball, double tol, long max_iters) {
  if (ball.min_residual() > ball.radius() * (1.0 + 1e-9))
    throw EmptyFeasibleSet("min_l1: feasible set is empty");
  if (max_iters < 0) max_iters = 50 * ball.n();

  const Eigen::VectorXd x_ls = ball.svd_v() * ball.least_squares_coords();

  MinL1Result best;
  best.x = x_ls;
  best.l1 = x_ls.lpNorm<1>();
  best.gap = l1_gap(ball, x_ls);

  const double gamma = std::max(0.1 * x_ls.lpNorm<Eigen::Infinity>(), 1e-10);
  const double relax = 1.8;
  Eigen::VectorXd z = x_ls;
  Eigen::VectorXd x(ball.n()), v(ball.n());
  long it = 0;
  for (; it < max_iters; ++it) {
    x = z.unaryExpr([&](double zi) {
      return zi > gamma ? zi - gamma : (zi < -gamma ? zi + gamma : 0.0);
    });
    v = ball.project(2.0 * x - z);
    z += relax * (v - x);

    const double gap = l1_gap(ball, v);
    const double l1 = v.lpNorm<1>();
    if (gap < best.gap) {
      best.x = v;
      best.l1 = l1;
      best.gap = gap;
    }
    if (gap <= tol * std::max(1.0, l1)) {
      best.x = v;
      best.l1 = l1;
      best.gap = gap;
      best.iters = it + 1;
      best.converged = true;
      return best;
    }
  }
  // Never report a point worse than the least-squares feasible point.
  if (best.l1 > x_ls.lpNorm<1>()) {
    best.x = x_ls;
    best.l1 = x_ls.lpNorm<1>();
    best.gap = l1_gap(ball, x_ls);
  }
  best.iters = it;
  best.converged = false;
  return best;
}

}  // namespace trl
