#include <cmath>
#include <string>

#include "bnpo/sim_env.hpp"

namespace bnpo::sim {

void TrainConfig::validate() const {
  if (steps == 0) throw std::invalid_argument("TrainConfig: steps must be positive");
  if (ppo_iterations == 0) throw std::invalid_argument("TrainConfig: ppo_iterations must be positive");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (group_size < 2) throw std::invalid_argument("TrainConfig: group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("TrainConfig: clip_epsilon must lie in (0, 1)");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
  }
}

TrainTrace train(const EnvironmentSpec& env, const PolicyState& init, const TrainConfig& cfg) {
  env.validate();
  cfg.validate();
  if (init.n_questions != env.n_questions || init.actions != env.actions_per_question ||
      init.logits.size() != env.n_questions * env.actions_per_question) {
    throw std::invalid_argument("train: initial policy does not match the environment");
  }

  TrainTrace trace;
  trace.steps.reserve(cfg.steps);
  PolicyState policy = init;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const PolicyState old_policy = policy;
    const auto batch = rollout(old_policy, env, cfg.batch_size, cfg.group_size, cfg.seed, step);
    const BatchContext context = cfg.estimator.baseline == BaselineMode::OracleP
                                     ? oracle_context(old_policy, env)
                                     : BatchContext{};
    const BatchAdvantages adv = compute_advantages(batch, cfg.estimator, context);

    StepRecord record;
    record.step = step;
    record.mean_reward = expected_reward(old_policy, env);
    for (const auto& diag : adv.channels) {
      record.channels.push_back(ChannelRecord{diag.fitted.alpha(), diag.fitted.beta(),
                                              diag.normalizer.alpha(), diag.normalizer.beta(),
                                              diag.raw.mean, diag.raw.variance});
    }

    for (std::size_t iter = 0; iter < cfg.ppo_iterations; ++iter) {
      const ParameterVector grad =
          surrogate_gradient(policy, old_policy, batch, adv, cfg.clip_epsilon);
      if (iter == 0) record.grad_norm = l2_norm(grad);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        policy.logits[i] += cfg.learning_rate * grad[i];
      }
    }
    trace.steps.push_back(std::move(record));

    if (!policy.finite()) {
      trace.final_policy = policy;
      throw NumericalDivergence("train: non-finite logits after step " + std::to_string(step),
                                std::move(trace));
    }
  }
  trace.final_policy = std::move(policy);
  return trace;
}

}  // namespace bnpo::sim
