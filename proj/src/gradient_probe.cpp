#include <cmath>
#include <stdexcept>

#include "bnpo/sim_env.hpp"

namespace bnpo::sim {

namespace {

ParameterVector one_batch_gradient(const PolicyState& policy, const EnvironmentSpec& env,
                                   const EstimatorSpec& spec, const BatchContext& context,
                                   std::size_t batch_size, std::size_t group_size,
                                   std::uint64_t seed, std::uint64_t index) {
  const auto batch = rollout(policy, env, batch_size, group_size, seed, index);
  const auto adv = compute_advantages(batch, spec, context);
  return estimate_gradient(policy, batch, adv);
}

// rows[t] = gradient of trial t; filled serially or under OpenMP.
std::vector<ParameterVector> run_trials(const PolicyState& policy, const EnvironmentSpec& env,
                                        const EstimatorSpec& spec, std::size_t trials,
                                        std::size_t batch_size, std::size_t group_size,
                                        std::uint64_t seed, Execution execution) {
  const BatchContext context = spec.baseline == BaselineMode::OracleP
                                   ? oracle_context(policy, env)
                                   : BatchContext{};
  std::vector<ParameterVector> rows(trials);
  if (execution == Execution::Parallel) {
    const auto count = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
      const auto idx = static_cast<std::size_t>(t);
      rows[idx] = one_batch_gradient(policy, env, spec, context, batch_size, group_size, seed, idx);
    }
  } else {
    for (std::size_t t = 0; t < trials; ++t) {
      rows[t] = one_batch_gradient(policy, env, spec, context, batch_size, group_size, seed, t);
    }
  }
  return rows;
}

}  // namespace

EngineeredProblem beta_quantile_problem(const BetaParams& ab, std::size_t n_questions) {
  EngineeredProblem problem{EnvironmentSpec::uniform(n_questions, 2, 1), {}};
  problem.policy = PolicyState::zeros(problem.env);
  for (std::size_t i = 0; i < n_questions; ++i) {
    const double rank = (static_cast<double>(i) + 0.5) / static_cast<double>(n_questions);
    const double p = beta::quantile(rank, ab);
    // softmax([z, 0])[0] = p  <=>  z = logit(p)
    problem.policy.logits[2 * i] = std::log(p) - std::log1p(-p);
  }
  return problem;
}

GradientMoments mean_gradient_estimate(const PolicyState& policy, const EnvironmentSpec& env,
                                       const EstimatorSpec& spec, std::size_t batches,
                                       std::size_t batch_size, std::size_t group_size,
                                       std::uint64_t seed, Execution execution) {
  if (batches < 2) throw std::invalid_argument("mean_gradient_estimate: need >= 2 batches");
  const auto rows =
      run_trials(policy, env, spec, batches, batch_size, group_size, seed, execution);
  const std::size_t dim = policy.logits.size();
  GradientMoments out{ParameterVector(dim, 0.0), ParameterVector(dim, 0.0), batches};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < dim; ++c) out.mean[c] += row[c];
  }
  const auto n = static_cast<double>(batches);
  for (double& v : out.mean) v /= n;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = row[c] - out.mean[c];
      out.std_error[c] += d * d;
    }
  }
  for (double& v : out.std_error) v = std::sqrt(v / (n - 1.0) / n);
  return out;
}

double jackknife_se(std::span<const double> replicates) {
  const auto n = static_cast<double>(replicates.size());
  if (replicates.size() < 2) return 0.0;
  double mean = 0.0;
  for (double r : replicates) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : replicates) ss += (r - mean) * (r - mean);
  return std::sqrt((n - 1.0) / n * ss);
}

double paired_jackknife_se(const ProbeResult& a, const ProbeResult& b) {
  if (a.jackknife_replicates.size() != b.jackknife_replicates.size()) {
    throw std::invalid_argument("paired_jackknife_se: probes ran a different number of trials");
  }
  std::vector<double> diff(a.jackknife_replicates.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = a.jackknife_replicates[i] - b.jackknife_replicates[i];
  }
  return jackknife_se(diff);
}

ProbeResult gradient_variance_probe(const PolicyState& policy, const EnvironmentSpec& env,
                                    const EstimatorSpec& spec, const ProbeConfig& config,
                                    Execution execution) {
  if (config.trials < 100) {
    throw std::invalid_argument("gradient_variance_probe: trials must be >= 100");
  }
  const auto rows = run_trials(policy, env, spec, config.trials, config.batch_size,
                               config.group_size, config.seed, execution);
  const std::size_t dim = policy.logits.size();
  const std::size_t trials = config.trials;
  const auto n = static_cast<double>(trials);

  ParameterVector mean(dim, 0.0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < dim; ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= n;
  ParameterVector sum_sq(dim, 0.0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = row[c] - mean[c];
      sum_sq[c] += d * d;
    }
  }

  ProbeResult out;
  out.per_coordinate_variance.resize(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    out.per_coordinate_variance[c] = sum_sq[c] / (n - 1.0);
    out.trace_of_covariance += out.per_coordinate_variance[c];
  }
  // Leaving trial i out: sum of squares about the reduced mean is
  // S2 - y^2 - y^2/(n-1), with y the deviation of trial i.
  out.jackknife_replicates.resize(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    double trace = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double y = rows[i][c] - mean[c];
      trace += (sum_sq[c] - y * y - y * y / (n - 1.0)) / (n - 2.0);
    }
    out.jackknife_replicates[i] = trace;
  }
  out.trace_jackknife_se = jackknife_se(out.jackknife_replicates);
  return out;
}

}  // namespace bnpo::sim
