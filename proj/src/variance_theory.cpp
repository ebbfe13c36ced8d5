#include "bnpo/variance_theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bnpo/special_functions.hpp"

namespace bnpo::theory {

using special::digamma;
using special::log_beta;
using special::trigamma;

namespace {

struct Point {
  double alpha;
  double beta;
};

// Running moments of one shard (Welford), merged with Chan's update.
struct ShardMoments {
  double count = 0.0;
  double mean_w = 0.0;
  double m2_w = 0.0;
  double mean_w2 = 0.0;
  double m2_w2 = 0.0;

  void add(double w) {
    count += 1.0;
    const double w2 = w * w;
    const double d1 = w - mean_w;
    mean_w += d1 / count;
    m2_w += d1 * (w - mean_w);
    const double d2 = w2 - mean_w2;
    mean_w2 += d2 / count;
    m2_w2 += d2 * (w2 - mean_w2);
  }

  void merge(const ShardMoments& o) {
    if (o.count == 0.0) return;
    const double n = count + o.count;
    const double d1 = o.mean_w - mean_w;
    const double d2 = o.mean_w2 - mean_w2;
    m2_w += o.m2_w + d1 * d1 * count * o.count / n;
    m2_w2 += o.m2_w2 + d2 * d2 * count * o.count / n;
    mean_w += d1 * o.count / n;
    mean_w2 += d2 * o.count / n;
    count = n;
  }
};

ShardMoments run_shard(const BetaParams& ab, const BetaParams& alphabeta, std::size_t draws,
                       std::uint64_t seed, std::size_t shard) {
  RandomStream rng = RandomStream::derive(seed, {shard});
  ShardMoments acc;
  for (std::size_t i = 0; i < draws; ++i) {
    const double p = beta::sample(ab, rng);
    const double r = rng.uniform() < p ? 1.0 : 0.0;
    acc.add((r - p) * std::exp(-beta::log_pdf(p, alphabeta)));
  }
  return acc;
}

double objective(const BetaParams& ab, Point x) {
  return log_variance(ab, BetaParams(x.alpha, x.beta)).value();
}

// Largest t in (0, 1] keeping x + t d at most 90% of the way to each wall
// of (0, upper_alpha) x (0, upper_beta).
double clip_to_region(Point x, Point d, double upper_alpha, double upper_beta) {
  double t = 1.0;
  auto limit = [&t](double pos, double dir, double lower, double upper) {
    if (dir > 0.0) {
      const double room = 0.9 * (upper - pos);
      if (pos + t * dir > pos + room) t = room / dir;
    } else if (dir < 0.0) {
      const double room = 0.9 * (pos - lower);
      if (pos + t * dir < pos - room) t = room / -dir;
    }
  };
  limit(x.alpha, d.alpha, 0.0, upper_alpha);
  limit(x.beta, d.beta, 0.0, upper_beta);
  return t;
}

}  // namespace

bool in_finite_region(const BetaParams& ab, const BetaParams& alphabeta) {
  return alphabeta.alpha() < (ab.alpha() + 3.0) / 2.0 &&
         alphabeta.beta() < (ab.beta() + 3.0) / 2.0;
}

ExtendedValue log_variance(const BetaParams& ab, const BetaParams& alphabeta) {
  if (!in_finite_region(ab, alphabeta)) return ExtendedValue::infinite();
  const double a = ab.alpha();
  const double b = ab.beta();
  const double al = alphabeta.alpha();
  const double be = alphabeta.beta();
  return ExtendedValue::finite(2.0 * log_beta(al, be) +
                               log_beta(a + 3.0 - 2.0 * al, b + 3.0 - 2.0 * be) -
                               log_beta(a, b));
}

BetaParams optimal_params(const BetaParams& ab) {
  return BetaParams(1.0 + ab.alpha() / 3.0, 1.0 + ab.beta() / 3.0);
}

double Gradient2::norm() const { return std::hypot(d_alpha, d_beta); }

Gradient2 gradient(const BetaParams& ab, const BetaParams& alphabeta) {
  if (!in_finite_region(ab, alphabeta)) {
    throw std::domain_error("theory::gradient: (alpha, beta) outside the finite-variance region");
  }
  const double al = alphabeta.alpha();
  const double be = alphabeta.beta();
  const double x = ab.alpha() + 3.0 - 2.0 * al;
  const double y = ab.beta() + 3.0 - 2.0 * be;
  const double psi_sum = digamma(al + be);
  const double psi_rest = digamma(x + y);
  return Gradient2{2.0 * (digamma(al) - psi_sum) - 2.0 * (digamma(x) - psi_rest),
                   2.0 * (digamma(be) - psi_sum) - 2.0 * (digamma(y) - psi_rest)};
}

Hessian2 hessian(const BetaParams& ab, const BetaParams& alphabeta) {
  if (!in_finite_region(ab, alphabeta)) {
    throw std::domain_error("theory::hessian: (alpha, beta) outside the finite-variance region");
  }
  const double al = alphabeta.alpha();
  const double be = alphabeta.beta();
  const double x = ab.alpha() + 3.0 - 2.0 * al;
  const double y = ab.beta() + 3.0 - 2.0 * be;
  const double t_sum = trigamma(al + be);
  const double t_rest = trigamma(x + y);
  Hessian2 h;
  h.h11 = 2.0 * trigamma(al) - 2.0 * t_sum + 4.0 * trigamma(x) - 4.0 * t_rest;
  h.h22 = 2.0 * trigamma(be) - 2.0 * t_sum + 4.0 * trigamma(y) - 4.0 * t_rest;
  h.h12 = -2.0 * t_sum - 4.0 * t_rest;
  return h;
}

HessianReport hessian_check(const BetaParams& ab) {
  const double x_alpha = 1.0 + ab.alpha() / 3.0;
  const double x_beta = 1.0 + ab.beta() / 3.0;
  const double s = 2.0 + (ab.alpha() + ab.beta()) / 3.0;
  const double t_s = trigamma(s);
  HessianReport r;
  r.h11 = 6.0 * trigamma(x_alpha) - 6.0 * t_s;
  r.h22 = 6.0 * trigamma(x_beta) - 6.0 * t_s;
  r.h12 = -6.0 * t_s;
  r.det = r.h11 * r.h22 - r.h12 * r.h12;
  r.positive_definite = r.h11 > 0.0 && r.det > 0.0;
  return r;
}

ArgminResult numeric_argmin(const BetaParams& ab, double tol, int max_iterations) {
  if (!(tol > 0.0)) throw std::invalid_argument("numeric_argmin: tol must be > 0");
  const double upper_alpha = (ab.alpha() + 3.0) / 2.0;
  const double upper_beta = (ab.beta() + 3.0) / 2.0;
  Point x{1.0, 1.0};
  double value = objective(ab, x);
  ArgminResult result;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const BetaParams here(x.alpha, x.beta);
    const Gradient2 g = gradient(ab, here);
    result = ArgminResult{here, iter, g.norm()};
    if (g.norm() < tol) return result;

    const Hessian2 h = hessian(ab, here);
    Point d{-g.d_alpha, -g.d_beta};
    if (h.positive_definite()) {
      const double det = h.det();
      d = Point{-(h.h22 * g.d_alpha - h.h12 * g.d_beta) / det,
                -(h.h11 * g.d_beta - h.h12 * g.d_alpha) / det};
    }
    double t = clip_to_region(x, d, upper_alpha, upper_beta);
    const double slope = g.d_alpha * d.alpha + g.d_beta * d.beta;
    // Armijo backtracking; the slack term absorbs rounding once the
    // decrease is below the resolution of L.
    const double slack = 1e-14 * (1.0 + std::abs(value));
    Point next{x.alpha + t * d.alpha, x.beta + t * d.beta};
    double next_value = objective(ab, next);
    for (int k = 0; k < 60 && next_value > value + 1e-4 * t * slope + slack; ++k) {
      t *= 0.5;
      next = Point{x.alpha + t * d.alpha, x.beta + t * d.beta};
      next_value = objective(ab, next);
    }
    x = next;
    value = next_value;
  }
  const BetaParams last(x.alpha, x.beta);
  result = ArgminResult{last, max_iterations, gradient(ab, last).norm()};
  if (result.gradient_norm < tol) return result;
  throw NonConvergence("numeric_argmin: no convergence after " +
                           std::to_string(max_iterations) + " iterations",
                       result);
}

WeightVarianceEstimate mc_weight_variance(const BetaParams& ab, const BetaParams& alphabeta,
                                          std::size_t n_samples, std::uint64_t seed,
                                          std::size_t shards, Execution execution) {
  if (alphabeta.alpha() > (ab.alpha() + 3.0) / 2.0 - kMonteCarloMargin ||
      alphabeta.beta() > (ab.beta() + 3.0) / 2.0 - kMonteCarloMargin) {
    throw std::domain_error(
        "mc_weight_variance: (alpha, beta) must sit at least 0.25 inside the finite region");
  }
  if (n_samples < 2) throw std::invalid_argument("mc_weight_variance: need >= 2 samples");
  shards = std::clamp<std::size_t>(shards, 1, n_samples);

  std::vector<ShardMoments> parts(shards);
  const auto shard_count = static_cast<std::ptrdiff_t>(shards);
  const std::size_t base = n_samples / shards;
  const std::size_t extra = n_samples % shards;
  if (execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < shard_count; ++s) {
      const auto idx = static_cast<std::size_t>(s);
      parts[idx] = run_shard(ab, alphabeta, base + (idx < extra ? 1 : 0), seed, idx);
    }
  } else {
    for (std::size_t s = 0; s < shards; ++s) {
      parts[s] = run_shard(ab, alphabeta, base + (s < extra ? 1 : 0), seed, s);
    }
  }

  ShardMoments total;
  for (const auto& part : parts) total.merge(part);
  const double n = total.count;
  WeightVarianceEstimate out;
  out.samples = n_samples;
  out.estimate = total.mean_w2;
  out.std_error = std::sqrt(total.m2_w2 / (n - 1.0) / n);
  out.mean_weight = total.mean_w;
  out.mean_weight_std_error = std::sqrt(total.m2_w / (n - 1.0) / n);
  return out;
}

}  // namespace bnpo::theory
