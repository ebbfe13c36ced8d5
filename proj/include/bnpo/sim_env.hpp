#pragma once

// Synthetic binary-reward environment with a tabular softmax policy. Each
// question has a fixed action set with a designated correct subset per
// reward channel, so p(q) and the policy gradient are available exactly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bnpo/advantage.hpp"
#include "bnpo/beta_model.hpp"
#include "bnpo/execution.hpp"
#include "bnpo/random_stream.hpp"

namespace bnpo::sim {

struct EnvironmentSpec {
  std::size_t n_questions = 0;
  std::size_t actions_per_question = 0;
  /// correct_masks[k][q][o] == 1 iff action o answers question q correctly
  /// under reward channel k.
  std::vector<std::vector<std::vector<std::uint8_t>>> correct_masks;
  /// Question distribution rho; sums to 1.
  std::vector<double> question_weights;

  std::size_t channels() const noexcept { return correct_masks.size(); }

  /// Throws std::invalid_argument when a mask is empty, covers every
  /// action, or has the wrong shape, or when the weights are not a
  /// probability vector.
  void validate() const;

  /// Uniform rho; on every channel the first `correct_actions` actions of
  /// each question are correct.
  static EnvironmentSpec uniform(std::size_t n_questions, std::size_t actions,
                                 std::size_t correct_actions, std::size_t channels = 1);
};

/// Softmax logits, one block of `actions` entries per question.
struct PolicyState {
  std::size_t n_questions = 0;
  std::size_t actions = 0;
  std::vector<double> logits;

  static PolicyState zeros(const EnvironmentSpec& env);

  std::span<const double> block(std::size_t question) const;
  std::span<double> block(std::size_t question);
  std::vector<double> probabilities(std::size_t question) const;
  double log_probability(std::size_t question, std::size_t action) const;
  bool finite() const;

  friend bool operator==(const PolicyState&, const PolicyState&) = default;
};

using ParameterVector = std::vector<double>;

/// p(q) = sum of softmax probabilities over the correct actions.
double exact_p(const PolicyState& policy, const EnvironmentSpec& env, std::size_t question,
               std::size_t channel = 0);

/// J = sum_q rho(q) p(q), averaged over channels.
double expected_reward(const PolicyState& policy, const EnvironmentSpec& env);

/// dJ/dtheta_{q,o} = rho(q) pi(o|q) (R(q,o) - p(q)). Requires K = 1.
ParameterVector exact_gradient(const PolicyState& policy, const EnvironmentSpec& env);

/// Exact rho-weighted moments of p(q) on `channel`.
MomentEstimate population_moments(const PolicyState& policy, const EnvironmentSpec& env,
                                  std::size_t channel = 0);

/// Batch context carrying the exact population moments, for OracleP specs.
BatchContext oracle_context(const PolicyState& policy, const EnvironmentSpec& env);

/// Expectation of estimate_gradient under an OracleP spec: the exact
/// gradient with question q's block divided by the spec's normalizer at
/// the exact p(q) (population-fitted for adaptive specs). Equals
/// exact_gradient for REINFORCE. Requires K = 1.
ParameterVector expected_estimator_gradient(const PolicyState& policy,
                                            const EnvironmentSpec& env,
                                            const EstimatorSpec& spec);

/// Samples `batch_size` questions from rho (with replacement) and
/// `group_size` actions per question from the policy. Deterministic in
/// (seed, step): question draws use substream {step, 0}, group g uses
/// {step, 1, g}. Each group carries its actions and exact p per channel.
std::vector<GroupRollout> rollout(const PolicyState& policy, const EnvironmentSpec& env,
                                  std::size_t batch_size, std::size_t group_size,
                                  std::uint64_t seed, std::uint64_t step);

/// (1/(n m)) sum over (q, o) of grad log pi(o|q) A(q, o).
ParameterVector estimate_gradient(const PolicyState& policy,
                                  std::span<const GroupRollout> rollouts,
                                  const BatchAdvantages& advantages);

/// min(r A, clip(r, 1-eps, 1+eps) A).
double ppo_surrogate(double ratio, double advantage, double eps);

/// Gradient of the mean clipped surrogate at `policy`, with ratios taken
/// against `old_policy`. Equals estimate_gradient when the policies match.
ParameterVector surrogate_gradient(const PolicyState& policy, const PolicyState& old_policy,
                                   std::span<const GroupRollout> rollouts,
                                   const BatchAdvantages& advantages, double eps);

double l2_norm(std::span<const double> v);

/// Two-action environment whose exact p values are the Beta(a, b)
/// quantiles at ranks (i - 0.5)/n, with a matching frozen policy.
struct EngineeredProblem {
  EnvironmentSpec env;
  PolicyState policy;
};
EngineeredProblem beta_quantile_problem(const BetaParams& ab, std::size_t n_questions);

struct GradientMoments {
  ParameterVector mean;
  ParameterVector std_error;
  std::size_t batches = 0;
};

/// Mean and per-coordinate standard error of estimate_gradient over
/// `batches` independent batches (batch b uses step b of `seed`).
GradientMoments mean_gradient_estimate(const PolicyState& policy, const EnvironmentSpec& env,
                                       const EstimatorSpec& spec, std::size_t batches,
                                       std::size_t batch_size, std::size_t group_size,
                                       std::uint64_t seed,
                                       Execution execution = Execution::Parallel);

struct ProbeConfig {
  std::size_t trials = 10000;
  std::size_t batch_size = 16;
  std::size_t group_size = 4;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double trace_of_covariance = 0.0;
  ParameterVector per_coordinate_variance;
  double trace_jackknife_se = 0.0;
  /// Leave-one-trial-out traces; trials with the same seed line up across
  /// estimators, so differences of replicates give paired errors.
  std::vector<double> jackknife_replicates;
};

/// Repeats one-batch gradient estimation `trials` (>= 100) times at a
/// frozen policy and reports the per-coordinate variance and its trace.
ProbeResult gradient_variance_probe(const PolicyState& policy, const EnvironmentSpec& env,
                                    const EstimatorSpec& spec, const ProbeConfig& config,
                                    Execution execution = Execution::Parallel);

/// Jackknife standard error of (trace_a - trace_b) from paired replicates.
double paired_jackknife_se(const ProbeResult& a, const ProbeResult& b);

/// Jackknife standard error from leave-one-out replicates.
double jackknife_se(std::span<const double> replicates);

// ---- Algorithm loop ------------------------------------------------------

struct TrainConfig {
  std::size_t steps = 200;
  std::size_t ppo_iterations = 1;
  std::size_t batch_size = 8;
  std::size_t group_size = 16;
  double clip_epsilon = 0.2;
  double learning_rate = 1.0;
  EstimatorSpec estimator{BnpoAdaptive{}};
  std::uint64_t seed = 0;

  void validate() const;
};

struct ChannelRecord {
  double a = 0.0;
  double b = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double mean_p = 0.0;
  double var_p = 0.0;
  friend bool operator==(const ChannelRecord&, const ChannelRecord&) = default;
};

struct StepRecord {
  std::size_t step = 0;
  /// Exact expected reward of the policy at the start of the step.
  double mean_reward = 0.0;
  /// L2 norm of the on-policy gradient estimate, before the update.
  double grad_norm = 0.0;
  std::vector<ChannelRecord> channels;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrainTrace {
  std::vector<StepRecord> steps;
  PolicyState final_policy;
};

class NumericalDivergence : public std::runtime_error {
 public:
  NumericalDivergence(const std::string& what, TrainTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const TrainTrace& partial_trace() const noexcept { return partial_; }

 private:
  TrainTrace partial_;
};

/// Runs the clipped-surrogate training loop: per step, snapshot the policy,
/// roll out, fit the batch's Beta parameters, compute advantages, then take
/// `ppo_iterations` plain gradient-ascent steps on the surrogate.
TrainTrace train(const EnvironmentSpec& env, const PolicyState& init, const TrainConfig& cfg);

}  // namespace bnpo::sim
