#pragma once

// Closed-form weight-variance objective for Beta-normalized advantages and
// its analysis: finiteness region, optimum, gradient, Hessian, a Newton
// minimizer, and a Monte Carlo oracle for the objective.
//
// With p ~ Beta(a, b), R ~ Bernoulli(p) and w = (R - p) / f(p; alpha, beta),
//   E[w^2] = B(alpha, beta)^2 B(a + 3 - 2 alpha, b + 3 - 2 beta) / B(a, b),
// which is finite iff alpha < (a + 3)/2 and beta < (b + 3)/2, and is
// minimized at (1 + a/3, 1 + b/3).

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "bnpo/beta_model.hpp"
#include "bnpo/execution.hpp"
#include "bnpo/extended_value.hpp"

namespace bnpo::theory {

/// True iff (alpha, beta) lies in the open finite-variance region of (a, b).
bool in_finite_region(const BetaParams& ab, const BetaParams& alphabeta);

/// L(alpha, beta) = 2 ln B(alpha, beta) + ln B(a+3-2alpha, b+3-2beta) - ln B(a, b),
/// or the infinite marker outside the finite-variance region.
ExtendedValue log_variance(const BetaParams& ab, const BetaParams& alphabeta);

/// (1 + a/3, 1 + b/3).
BetaParams optimal_params(const BetaParams& ab);

struct Gradient2 {
  double d_alpha = 0.0;
  double d_beta = 0.0;
  double norm() const;
};

/// Closed-form partial derivatives of L. Throws std::domain_error on or
/// outside the region boundary.
Gradient2 gradient(const BetaParams& ab, const BetaParams& alphabeta);

struct Hessian2 {
  double h11 = 0.0;
  double h12 = 0.0;
  double h22 = 0.0;
  double det() const { return h11 * h22 - h12 * h12; }
  bool positive_definite() const { return h11 > 0.0 && det() > 0.0; }
};

/// Second partials of L at an arbitrary interior point.
Hessian2 hessian(const BetaParams& ab, const BetaParams& alphabeta);

struct HessianReport {
  double h11 = 0.0;
  double h22 = 0.0;
  double h12 = 0.0;
  double det = 0.0;
  bool positive_definite = false;
};

/// Hessian at optimal_params(ab) from the trigamma closed forms
///   H11 = 6 psi1(1 + a/3) - 6 psi1(2 + (a+b)/3), H12 = -6 psi1(2 + (a+b)/3).
HessianReport hessian_check(const BetaParams& ab);

struct ArgminResult {
  BetaParams params{1.0, 1.0};
  int iterations = 0;
  double gradient_norm = 0.0;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, ArgminResult last)
      : std::runtime_error(what), last_(last) {}
  const ArgminResult& last_iterate() const noexcept { return last_; }

 private:
  ArgminResult last_;
};

inline constexpr int kArgminMaxIterations = 200;

/// Minimizes L over the open region from (1, 1): damped Newton where the
/// Hessian is positive definite, backtracking gradient descent otherwise,
/// never stepping more than 90% of the way to a boundary. Stops when the
/// gradient norm drops below `tol`; throws NonConvergence after
/// `max_iterations`.
ArgminResult numeric_argmin(const BetaParams& ab, double tol = 1e-8,
                            int max_iterations = kArgminMaxIterations);

inline constexpr double kMonteCarloMargin = 0.25;

struct WeightVarianceEstimate {
  double estimate = 0.0;   // mean of w^2
  double std_error = 0.0;  // standard error of that mean
  double mean_weight = 0.0;
  double mean_weight_std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of E[w^2]. Requires alpha <= (a+3)/2 - 0.25 and
/// beta <= (b+3)/2 - 0.25 (std::domain_error otherwise). Work is split into
/// `shards` independent substreams of `seed` and merged in shard order.
WeightVarianceEstimate mc_weight_variance(const BetaParams& ab, const BetaParams& alphabeta,
                                          std::size_t n_samples, std::uint64_t seed,
                                          std::size_t shards = 64,
                                          Execution execution = Execution::Parallel);

}  // namespace bnpo::theory
