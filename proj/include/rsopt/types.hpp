#pragma once

// Shared scalar/vector aliases, the tagged extended-real value used for
// "+infinity" results, and the two error categories the toolkit reports.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rsopt {

template <typename Scalar = double>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar = double>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
// The modal analysis is always double precision; fixed-size 2x2 blocks.
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

// Bad inputs / out-of-contract requests.  CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation that started out valid but failed numerically
// (non-convergence, gain exceeded, ...).  CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Extended real: either a finite double or a tagged +infinity.  Infinite
// values never enter floating-point arithmetic; callers branch on the tag.
template <typename Scalar = double>
class Ext {
 public:
  constexpr Ext() : value_(0), finite_(true) {}
  constexpr Ext(Scalar v) : value_(v), finite_(true) {}  // NOLINT(implicit)

  static constexpr Ext infinity() {
    Ext e;
    e.finite_ = false;
    e.value_ = Scalar(0);
    return e;
  }

  constexpr bool is_finite() const { return finite_; }
  Scalar value() const {
    if (!finite_) throw NumericalError("Ext: value() called on +infinity");
    return value_;
  }
  // Finite value or the given fallback; handy for plotting/CSV paths.
  constexpr Scalar value_or(Scalar fallback) const {
    return finite_ ? value_ : fallback;
  }

  friend bool operator<(const Ext& a, const Ext& b) {
    if (!a.finite_) return false;        // +inf < x is always false
    if (!b.finite_) return true;         // finite < +inf
    return a.value_ < b.value_;
  }
  friend bool operator==(const Ext& a, const Ext& b) {
    if (a.finite_ != b.finite_) return false;
    return !a.finite_ || a.value_ == b.value_;
  }

 private:
  Scalar value_;
  bool finite_;
};

using Extd = Ext<double>;

template <typename Scalar>
constexpr Scalar sq(Scalar x) {
  return x * x;
}

// Compensated accumulator; keeps long quadrature/recurrence sums from
// drifting at the 1e-10 relative tolerances used across the toolkit.
struct KahanSum {
  double s = 0, c = 0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace rsopt
