#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "trunclasso/errors.hpp"
#include "trunclasso/rng.hpp"

namespace trl {

// One interval of a truncation set. Ends may be +/- infinity.
struct Interval {
  double lo;
  double hi;
};

// Ordered union of disjoint intervals S on the real line. Intervals are
// sorted, strictly disjoint, and each has positive length.
class TruncationSet {
 public:
  explicit TruncationSet(std::vector<Interval> intervals);

  // Grammar: comma-separated "[a,b]" with "-inf"/"inf" allowed,
  // e.g. "[0,inf]" or "[-2,-1],[1,2]".
  static TruncationSet parse(std::string_view text);

  std::string str() const;

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool contains(double x) const;
  bool whole_line() const;

 private:
  std::vector<Interval> intervals_;
};

// Standard normal pdf / cdf / upper tail. cdf and sf route through erfc so
// that extreme arguments keep full relative accuracy in the small tail.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);

// P[lo <= Z <= hi] for a standard normal Z, evaluated as a difference of the
// nearer tail to avoid cancellation when both ends sit in one tail.
double gauss_mass(double lo, double hi);

// gamma_S(t) = P[Z + t in S].
double survival(const TruncationSet& set, double t);

// The law of (Z + t) | Z + t in S with Z standard normal. Construction fails
// if the survival probability underflows to zero.
class TruncatedGaussianView {
 public:
  TruncatedGaussianView(double location, TruncationSet set);

  double location() const { return t_; }
  const TruncationSet& set() const { return set_; }
  double mass() const { return mass_; }
  // Unnormalized mass of each interval; sums to mass().
  const std::vector<double>& interval_mass() const { return interval_mass_; }

 private:
  double t_;
  TruncationSet set_;
  double mass_;
  std::vector<double> interval_mass_;
};

double trunc_mean(const TruncatedGaussianView& view);
double trunc_var(const TruncatedGaussianView& view);

double cdf(const TruncatedGaussianView& view, double x);

// Returns x in the set with |cdf(view, x) - q| <= tol.
double inverse_cdf(const TruncatedGaussianView& view, double q, double tol = 1e-13);

// Draw from the view by interval selection followed by CDF inversion within
// the chosen interval. Output distribution is within total variation 1e-12
// of the exact law; intervals with mass fraction below zeta/(3r) are dropped
// from the selection step.
double sample(const TruncatedGaussianView& view, Rng& rng);

}  // namespace trl
