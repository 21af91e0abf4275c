#pragma once

#include <stdexcept>
#include <string>

namespace trl {

// Input that cannot be parsed or violates a structural invariant.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truncated view with zero survival mass in floating point.
struct InvalidView : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalUnderflow : std::runtime_error {
  explicit NumericalUnderflow(const std::string& what, long row = -1)
      : std::runtime_error(what), row(row) {}
  long row;
};

struct ToleranceUnreachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejection sampler exceeded its work budget; the survival probability of
// the requested truncation set is too small for the generator to be useful.
struct SurvivalTooLow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularFactorization : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The residual ball contains no point (least-squares residual exceeds radius).
struct EmptyFeasibleSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace trl
