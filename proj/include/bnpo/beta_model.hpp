#pragma once

// The Beta distribution: density, moments, sampling and method-of-moments
// fitting of the spread of per-question success rates.

#include <cstddef>
#include <span>

#include "bnpo/extended_value.hpp"
#include "bnpo/random_stream.hpp"

namespace bnpo {

/// Shape parameters (alpha, beta) of a Beta distribution, both > 0.
/// Used for the data distribution (a, b) and the normalizer (alpha, beta).
class BetaParams {
 public:
  BetaParams(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  friend bool operator==(const BetaParams&, const BetaParams&) = default;

 private:
  double alpha_;
  double beta_;
};

/// Sample mean and variance of a set of success rates.
struct MomentEstimate {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;

  /// Throws std::invalid_argument unless 0 <= mean <= 1, variance >= 0 and
  /// count >= 1.
  void validate() const;
};

enum class VarianceConvention { Population, Sample };

/// Clamps applied before inverting the moment equations, so that every
/// batch (including all-equal or all-0/1 success rates) yields a finite,
/// positive (a, b).
struct DegeneracyGuard {
  double mean_margin = 1e-4;
  double variance_floor = 1e-6;
  double variance_ceiling_fraction = 0.99;
  double max_concentration = 1e4;
};

namespace beta {

double log_pdf(double p, const BetaParams& params);

/// Density at p in [0, 1]. Returns the infinite marker at an endpoint whose
/// exponent is negative. Throws std::domain_error for p outside [0, 1].
ExtendedValue pdf(double p, const BetaParams& params);

double mean(const BetaParams& params);
double variance(const BetaParams& params);

/// Interior mode; requires alpha > 1 and beta > 1 (std::invalid_argument
/// otherwise).
double mode(const BetaParams& params);

/// Regularized incomplete Beta function I_p(alpha, beta).
double cdf(double p, const BetaParams& params);

/// Inverse of cdf, for u in [0, 1].
double quantile(double u, const BetaParams& params);

/// Gamma(shape, 1) variate (Marsaglia-Tsang).
double sample_gamma(double shape, RandomStream& rng);

/// One draw from Beta(alpha, beta) via the ratio of two gamma variates.
double sample(const BetaParams& params, RandomStream& rng);

MomentEstimate moments(std::span<const double> values,
                       VarianceConvention convention = VarianceConvention::Population);

/// Weighted moments of `values` under probability `weights` (exact
/// population moments; count is values.size()).
MomentEstimate weighted_moments(std::span<const double> values,
                                std::span<const double> weights);

/// Mean and variance after applying the guard.
MomentEstimate guard_moments(const MomentEstimate& est, const DegeneracyGuard& guard);

/// Method-of-moments inversion:
///   c = m(1-m)/v - 1,  a = c m,  b = c (1-m)
/// on the guarded (m, v).
BetaParams fit_moments(const MomentEstimate& est, const DegeneracyGuard& guard = {});

}  // namespace beta
}  // namespace bnpo
