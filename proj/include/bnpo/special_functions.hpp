#pragma once

// Scalar special functions on the positive real axis: log-gamma, log-Beta,
// digamma and trigamma. All functions are pure and thread-safe.

#include <stdexcept>

namespace bnpo::special {

/// A real number strictly greater than zero. Construction with a value
/// <= 0 (or NaN) throws std::domain_error.
class PositiveReal {
 public:
  explicit PositiveReal(double value);
  double value() const noexcept { return value_; }
  operator double() const noexcept { return value_; }

 private:
  double value_;
};

/// ln Gamma(x) for x > 0. Relative error <= 1e-12 on [1e-3, 1e3];
/// Gamma(1) and Gamma(2) give exactly 0.
double log_gamma(double x);

/// ln B(x, y) = ln Gamma(x) + ln Gamma(y) - ln Gamma(x + y).
double log_beta(double x, double y);

/// psi(x) = d/dx ln Gamma(x).
double digamma(double x);

/// psi_1(x) = d/dx psi(x).
double trigamma(double x);

inline constexpr double kEulerGamma = 0.577215664901532860607;

}  // namespace bnpo::special
