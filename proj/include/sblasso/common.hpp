#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sblasso {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Invalid arguments: bad shapes, out-of-domain values, malformed responses.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The objective has no finite minimizer for the requested configuration
// (flat or power-inverse hyperpriors).
class UnboundedObjectiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A cost or gradient evaluation produced a non-finite value. Carries the
// offending iterate so the caller can inspect where things went wrong.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, Vec iterate = {})
      : std::runtime_error(what), iterate_(std::move(iterate)) {}

  const Vec& iterate() const noexcept { return iterate_; }

 private:
  Vec iterate_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace sblasso
