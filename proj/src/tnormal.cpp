#include "trunclasso/tnormal.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace trl {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
constexpr double kMinSurvival = 1e-300;

double fmt(double v, std::string& out) {
  char buf[32];
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return v;
  }
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
  return v;
}

}  // namespace

double normal_pdf(double x) {
  if (std::isinf(x)) return 0.0;
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double gauss_mass(double lo, double hi) {
  if (!(lo < hi)) return 0.0;
  double p;
  if (lo > 0.0) {
    p = normal_sf(lo) - normal_sf(hi);
  } else if (hi < 0.0) {
    p = normal_cdf(hi) - normal_cdf(lo);
  } else {
    p = normal_cdf(hi) - normal_cdf(lo);
  }
  return std::max(p, 0.0);
}

TruncationSet::TruncationSet(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw ParseError("truncation set: no intervals");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (std::isnan(iv.lo) || std::isnan(iv.hi))
      throw ParseError("truncation set: NaN endpoint");
    if (!(iv.lo < iv.hi))
      throw ParseError("truncation set: interval must have lo < hi");
    if (i > 0 && !(intervals_[i - 1].hi < iv.lo))
      throw ParseError("truncation set: intervals must be sorted and disjoint");
  }
}

TruncationSet TruncationSet::parse(std::string_view text) {
  std::vector<Interval> ivs;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto number = [&]() -> double {
    skip_ws();
    std::string tok;
    while (i < text.size() && text[i] != ',' && text[i] != ']') tok += text[i++];
    // trim trailing spaces
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
      tok.pop_back();
    if (tok.empty()) throw ParseError("truncation set: expected number");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
      throw ParseError("truncation set: bad number '" + tok + "'");
    return v;
  };
  skip_ws();
  while (i < text.size()) {
    if (text[i] != '[') throw ParseError("truncation set: expected '['");
    ++i;
    const double lo = number();
    skip_ws();
    if (i >= text.size() || text[i] != ',')
      throw ParseError("truncation set: expected ',' inside interval");
    ++i;
    const double hi = number();
    skip_ws();
    if (i >= text.size() || text[i] != ']')
      throw ParseError("truncation set: expected ']'");
    ++i;
    ivs.push_back({lo, hi});
    skip_ws();
    if (i < text.size()) {
      if (text[i] != ',') throw ParseError("truncation set: expected ',' between intervals");
      ++i;
      skip_ws();
      if (i >= text.size()) throw ParseError("truncation set: trailing ','");
    }
  }
  return TruncationSet(std::move(ivs));
}

std::string TruncationSet::str() const {
  std::string out;
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (i) out += ',';
    out += '[';
    fmt(intervals_[i].lo, out);
    out += ',';
    fmt(intervals_[i].hi, out);
    out += ']';
  }
  return out;
}

bool TruncationSet::contains(double x) const {
  for (const auto& iv : intervals_)
    if (x >= iv.lo && x <= iv.hi) return true;
  return false;
}

bool TruncationSet::whole_line() const {
  return intervals_.size() == 1 && std::isinf(intervals_[0].lo) &&
         std::isinf(intervals_[0].hi);
}

double survival(const TruncationSet& set, double t) {
  double p = 0.0;
  for (const auto& iv : set.intervals()) p += gauss_mass(iv.lo - t, iv.hi - t);
  return std::min(p, 1.0);
}

TruncatedGaussianView::TruncatedGaussianView(double location, TruncationSet set)
    : t_(location), set_(std::move(set)) {
  interval_mass_.reserve(set_.intervals().size());
  mass_ = 0.0;
  for (const auto& iv : set_.intervals()) {
    const double p = gauss_mass(iv.lo - t_, iv.hi - t_);
    interval_mass_.push_back(p);
    mass_ += p;
  }
  mass_ = std::min(mass_, 1.0);
  if (!(mass_ > 0.0))
    throw InvalidView("truncated view has zero survival mass at t=" +
                      std::to_string(t_));
}

namespace {

// Conditional moments of R = Z - t restricted to one standardized interval
// [a, b]: m1 = E[R | interval], m2 = E[R^2 | interval].
void interval_moments(double a, double b, double p, double& m1, double& m2) {
  const double pa = normal_pdf(a);
  const double pb = normal_pdf(b);
  const double apa = std::isfinite(a) ? a * pa : 0.0;
  const double bpb = std::isfinite(b) ? b * pb : 0.0;
  m1 = (pa - pb) / p;
  m2 = 1.0 + (apa - bpb) / p;
}

}  // namespace

double trunc_mean(const TruncatedGaussianView& view) {
  if (view.mass() < kMinSurvival)
    throw NumericalUnderflow("survival underflow in trunc_mean");
  const double t = view.location();
  double num = 0.0;
  for (std::size_t i = 0; i < view.set().intervals().size(); ++i) {
    const auto& iv = view.set().intervals()[i];
    num += normal_pdf(iv.lo - t) - normal_pdf(iv.hi - t);
  }
  return t + num / view.mass();
}

double trunc_var(const TruncatedGaussianView& view) {
  if (view.mass() < kMinSurvival)
    throw NumericalUnderflow("survival underflow in trunc_var");
  const double t = view.location();
  double er = 0.0, er2 = 0.0;
  for (std::size_t i = 0; i < view.set().intervals().size(); ++i) {
    const double p = view.interval_mass()[i];
    if (p <= 0.0) continue;
    const auto& iv = view.set().intervals()[i];
    double m1, m2;
    interval_moments(iv.lo - t, iv.hi - t, p, m1, m2);
    const double w = p / view.mass();
    er += w * m1;
    er2 += w * m2;
  }
  return std::max(er2 - er * er, 0.0);
}

double cdf(const TruncatedGaussianView& view, double x) {
  const double t = view.location();
  double acc = 0.0;
  for (std::size_t i = 0; i < view.set().intervals().size(); ++i) {
    const auto& iv = view.set().intervals()[i];
    if (x >= iv.hi) {
      acc += view.interval_mass()[i];
    } else if (x > iv.lo) {
      acc += gauss_mass(iv.lo - t, x - t);
      break;
    } else {
      break;
    }
  }
  return std::min(acc / view.mass(), 1.0);
}

namespace {

// Solve gauss_mass(a, z) = local for z in the standardized interval [a, b],
// to absolute mass accuracy tol_mass. Bracket by doubling when an end is
// infinite, then bisect.
double invert_in_interval(double a, double b, double local, double tol_mass) {
  auto mass_to = [&](double z) { return gauss_mass(a, z); };
  double lo, hi;
  if (std::isfinite(a)) {
    lo = a;
  } else {
    double z = std::isfinite(b) ? std::min(b, 0.0) : 0.0;
    double step = 1.0;
    while (mass_to(z) > local && step < 1e6) {
      z -= step;
      step *= 2.0;
    }
    lo = z;
  }
  if (std::isfinite(b)) {
    hi = b;
  } else {
    double z = std::isfinite(a) ? std::max(a, 0.0) : 0.0;
    double step = 1.0;
    while (mass_to(z) < local && step < 1e6) {
      z += step;
      step *= 2.0;
    }
    hi = z;
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double m = mass_to(mid);
    if (std::abs(m - local) <= tol_mass &&
        hi - lo <= 1e-9 * std::max(1.0, std::abs(mid)))
      break;
    if (m < local)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::abs(mid) * 4e-16 + 5e-324) break;
  }
  return mid;
}

}  // namespace

double inverse_cdf(const TruncatedGaussianView& view, double q, double tol) {
  if (!(q > 0.0 && q < 1.0)) throw ParseError("inverse_cdf: q must be in (0,1)");
  if (!(tol > 0.0) || tol < 1e-15)
    throw ToleranceUnreachable("inverse_cdf: tol below 1e-15");
  const double t = view.location();
  const double target = q * view.mass();
  double acc = 0.0;
  std::size_t idx = view.set().intervals().size() - 1;
  for (std::size_t i = 0; i < view.set().intervals().size(); ++i) {
    if (acc + view.interval_mass()[i] >= target) {
      idx = i;
      break;
    }
    acc += view.interval_mass()[i];
  }
  const auto& iv = view.set().intervals()[idx];
  const double local = std::max(target - acc, 0.0);
  const double z =
      invert_in_interval(iv.lo - t, iv.hi - t, local, tol * view.mass());
  return std::clamp(t + z, iv.lo, iv.hi);
}

double sample(const TruncatedGaussianView& view, Rng& rng) {
  constexpr double kZeta = 1e-12;
  const auto& masses = view.interval_mass();
  const double cut = kZeta / (3.0 * static_cast<double>(masses.size()));
  double kept_total = 0.0;
  for (double p : masses)
    if (p / view.mass() >= cut) kept_total += p;
  const double u1 = rng.uniform() * kept_total;
  double acc = 0.0;
  std::size_t idx = masses.size() - 1;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (masses[i] / view.mass() < cut) continue;
    acc += masses[i];
    if (u1 <= acc) {
      idx = i;
      break;
    }
  }
  const auto& iv = view.set().intervals()[idx];
  const double t = view.location();
  const double u2 = rng.uniform();
  const double local = u2 * masses[idx];
  const double z = invert_in_interval(iv.lo - t, iv.hi - t, local,
                                      1e-13 * std::max(masses[idx], 1e-250));
  return std::clamp(t + z, iv.lo, iv.hi);
}

}  // namespace trl
