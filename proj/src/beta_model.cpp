#include "bnpo/beta_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bnpo/special_functions.hpp"

namespace bnpo {

BetaParams::BetaParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("BetaParams: alpha and beta must be finite and > 0 (got " +
                                std::to_string(alpha) + ", " + std::to_string(beta) + ")");
  }
}

void MomentEstimate::validate() const {
  if (!(mean >= 0.0 && mean <= 1.0)) {
    throw std::invalid_argument("MomentEstimate: mean outside [0, 1]");
  }
  if (!(variance >= 0.0)) throw std::invalid_argument("MomentEstimate: negative variance");
  if (count < 1) throw std::invalid_argument("MomentEstimate: empty sample");
}

namespace beta {

namespace {

void require_unit_interval(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("beta: p must lie in [0, 1], got " + std::to_string(p));
  }
}

// Continued fraction for the incomplete Beta function (modified Lentz).
double incomplete_beta_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double log_pdf(double p, const BetaParams& params) {
  require_unit_interval(p);
  const double a = params.alpha();
  const double b = params.beta();
  // (a-1) ln p is taken as 0 when a == 1, including at p == 0.
  const double left = (a == 1.0) ? 0.0 : (a - 1.0) * std::log(p);
  const double right = (b == 1.0) ? 0.0 : (b - 1.0) * std::log1p(-p);
  return -special::log_beta(a, b) + left + right;
}

ExtendedValue pdf(double p, const BetaParams& params) {
  require_unit_interval(p);
  if ((p == 0.0 && params.alpha() < 1.0) || (p == 1.0 && params.beta() < 1.0)) {
    return ExtendedValue::infinite();
  }
  return ExtendedValue::finite(std::exp(log_pdf(p, params)));
}

double mean(const BetaParams& params) {
  return params.alpha() / (params.alpha() + params.beta());
}

double variance(const BetaParams& params) {
  const double s = params.alpha() + params.beta();
  return params.alpha() * params.beta() / (s * s * (s + 1.0));
}

double mode(const BetaParams& params) {
  if (!(params.alpha() > 1.0 && params.beta() > 1.0)) {
    throw std::invalid_argument("beta::mode: requires alpha > 1 and beta > 1");
  }
  return (params.alpha() - 1.0) / (params.alpha() + params.beta() - 2.0);
}

double cdf(double p, const BetaParams& params) {
  require_unit_interval(p);
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double a = params.alpha();
  const double b = params.beta();
  const double log_front =
      a * std::log(p) + b * std::log1p(-p) - special::log_beta(a, b);
  const double front = std::exp(log_front);
  if (p < (a + 1.0) / (a + b + 2.0)) {
    return front * incomplete_beta_fraction(p, a, b) / a;
  }
  return 1.0 - front * incomplete_beta_fraction(1.0 - p, b, a) / b;
}

double quantile(double u, const BetaParams& params) {
  require_unit_interval(u);
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid, params) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double sample_gamma(double shape, RandomStream& rng) {
  if (shape < 1.0) {
    // Gamma(k) = Gamma(k + 1) * U^{1/k}
    const double g = sample_gamma(shape + 1.0, rng);
    return g * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      // Box-Muller, one normal per pair of uniforms.
      const double u1 = rng.uniform_open();
      const double u2 = rng.uniform();
      x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample(const BetaParams& params, RandomStream& rng) {
  for (;;) {
    const double x = sample_gamma(params.alpha(), rng);
    const double y = sample_gamma(params.beta(), rng);
    const double p = x / (x + y);
    // Reject the measure-zero endpoints produced by underflow.
    if (p > 0.0 && p < 1.0) return p;
  }
}

MomentEstimate moments(std::span<const double> values, VarianceConvention convention) {
  if (values.empty()) throw std::invalid_argument("beta::moments: empty input");
  const auto n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  const double m = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  double var = 0.0;
  if (convention == VarianceConvention::Population) {
    var = ss / static_cast<double>(n);
  } else if (n > 1) {
    var = ss / static_cast<double>(n - 1);
  }
  return MomentEstimate{std::clamp(m, 0.0, 1.0), var, n};
}

MomentEstimate weighted_moments(std::span<const double> values,
                                std::span<const double> weights) {
  if (values.empty() || values.size() != weights.size()) {
    throw std::invalid_argument("beta::weighted_moments: size mismatch or empty input");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += weights[i] * values[i];
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    var += weights[i] * (values[i] - m) * (values[i] - m);
  }
  return MomentEstimate{std::clamp(m, 0.0, 1.0), var, values.size()};
}

MomentEstimate guard_moments(const MomentEstimate& est, const DegeneracyGuard& guard) {
  est.validate();
  MomentEstimate out = est;
  out.mean = std::clamp(est.mean, guard.mean_margin, 1.0 - guard.mean_margin);
  const double spread = out.mean * (1.0 - out.mean);
  out.variance = std::max(est.variance, guard.variance_floor);
  out.variance = std::min(out.variance, guard.variance_ceiling_fraction * spread);
  return out;
}

BetaParams fit_moments(const MomentEstimate& est, const DegeneracyGuard& guard) {
  const MomentEstimate g = guard_moments(est, guard);
  double concentration = g.mean * (1.0 - g.mean) / g.variance - 1.0;
  concentration = std::min(concentration, guard.max_concentration);
  return BetaParams(concentration * g.mean, concentration * (1.0 - g.mean));
}

}  // namespace beta
}  // namespace bnpo
