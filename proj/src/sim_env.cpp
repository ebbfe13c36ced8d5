#include "bnpo/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>

namespace bnpo::sim {

namespace {

std::size_t sample_index(std::span<const double> probabilities, RandomStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  // Rounding left u above the final cumulative sum: take the last action
  // with nonzero probability.
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i] > 0.0) return i;
  }
  return probabilities.size() - 1;
}

void require_single_channel(const EnvironmentSpec& env, const char* fn) {
  if (env.channels() != 1) {
    throw std::invalid_argument(std::string(fn) + ": requires a single reward channel");
  }
}

void accumulate_score(const PolicyState& policy, std::size_t question, std::size_t action,
                      double weight, ParameterVector& out) {
  const auto probs = policy.probabilities(question);
  const std::size_t offset = question * policy.actions;
  for (std::size_t o = 0; o < policy.actions; ++o) {
    const double indicator = (o == action) ? 1.0 : 0.0;
    out[offset + o] += (indicator - probs[o]) * weight;
  }
}

void check_alignment(std::span<const GroupRollout> rollouts, const BatchAdvantages& adv) {
  if (adv.values.size() != rollouts.size()) {
    throw std::invalid_argument("estimate_gradient: advantages do not match the rollouts");
  }
  for (std::size_t g = 0; g < rollouts.size(); ++g) {
    if (rollouts[g].actions.size() != rollouts[g].group_size() ||
        adv.values[g].size() != rollouts[g].group_size()) {
      throw std::invalid_argument("estimate_gradient: group " + std::to_string(g) +
                                  " is misaligned with its advantages or has no actions");
    }
  }
}

// (1/(n m)) sum of score * weight(g, j), accumulated in (group, output) order.
template <class WeightFn>
ParameterVector accumulate(const PolicyState& policy, std::span<const GroupRollout> rollouts,
                           WeightFn&& weight) {
  ParameterVector grad(policy.logits.size(), 0.0);
  std::size_t samples = 0;
  for (std::size_t g = 0; g < rollouts.size(); ++g) {
    const auto& group = rollouts[g];
    if (group.question_id >= policy.n_questions) {
      throw std::out_of_range("estimate_gradient: question id out of range");
    }
    for (std::size_t j = 0; j < group.actions.size(); ++j) {
      accumulate_score(policy, group.question_id, group.actions[j], weight(g, j), grad);
    }
    samples += group.actions.size();
  }
  if (samples > 0) {
    for (double& v : grad) v /= static_cast<double>(samples);
  }
  return grad;
}

}  // namespace

void EnvironmentSpec::validate() const {
  if (n_questions == 0) throw std::invalid_argument("EnvironmentSpec: no questions");
  if (actions_per_question < 2) {
    throw std::invalid_argument("EnvironmentSpec: need at least 2 actions per question");
  }
  if (correct_masks.empty()) throw std::invalid_argument("EnvironmentSpec: no reward channels");
  for (std::size_t k = 0; k < correct_masks.size(); ++k) {
    if (correct_masks[k].size() != n_questions) {
      throw std::invalid_argument("EnvironmentSpec: channel " + std::to_string(k) +
                                  " mask has the wrong number of questions");
    }
    for (std::size_t q = 0; q < n_questions; ++q) {
      const auto& mask = correct_masks[k][q];
      if (mask.size() != actions_per_question) {
        throw std::invalid_argument("EnvironmentSpec: mask row has the wrong number of actions");
      }
      std::size_t hits = 0;
      for (auto v : mask) {
        if (v > 1) throw std::invalid_argument("EnvironmentSpec: mask entries must be 0 or 1");
        hits += v;
      }
      if (hits == 0 || hits == actions_per_question) {
        throw std::invalid_argument("EnvironmentSpec: question " + std::to_string(q) +
                                    " needs a nonempty proper correct subset");
      }
    }
  }
  if (question_weights.size() != n_questions) {
    throw std::invalid_argument("EnvironmentSpec: one weight per question required");
  }
  double total = 0.0;
  for (double w : question_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("EnvironmentSpec: negative question weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("EnvironmentSpec: question weights must sum to 1");
  }
}

EnvironmentSpec EnvironmentSpec::uniform(std::size_t n_questions, std::size_t actions,
                                         std::size_t correct_actions, std::size_t channels) {
  EnvironmentSpec env;
  env.n_questions = n_questions;
  env.actions_per_question = actions;
  std::vector<std::uint8_t> row(actions, 0);
  for (std::size_t o = 0; o < std::min(correct_actions, actions); ++o) row[o] = 1;
  env.correct_masks.assign(channels, std::vector<std::vector<std::uint8_t>>(n_questions, row));
  env.question_weights.assign(n_questions, n_questions ? 1.0 / static_cast<double>(n_questions) : 0.0);
  env.validate();
  return env;
}

PolicyState PolicyState::zeros(const EnvironmentSpec& env) {
  return PolicyState{env.n_questions, env.actions_per_question,
                     std::vector<double>(env.n_questions * env.actions_per_question, 0.0)};
}

std::span<const double> PolicyState::block(std::size_t question) const {
  if (question >= n_questions) throw std::out_of_range("PolicyState: question out of range");
  return std::span<const double>(logits).subspan(question * actions, actions);
}

std::span<double> PolicyState::block(std::size_t question) {
  if (question >= n_questions) throw std::out_of_range("PolicyState: question out of range");
  return std::span<double>(logits).subspan(question * actions, actions);
}

std::vector<double> PolicyState::probabilities(std::size_t question) const {
  const auto z = block(question);
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t o = 0; o < z.size(); ++o) {
    p[o] = std::exp(z[o] - top);
    total += p[o];
  }
  for (double& v : p) v /= total;
  return p;
}

double PolicyState::log_probability(std::size_t question, std::size_t action) const {
  const auto z = block(question);
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - top);
  return z[action] - top - std::log(total);
}

bool PolicyState::finite() const {
  return std::all_of(logits.begin(), logits.end(), [](double v) { return std::isfinite(v); });
}

double exact_p(const PolicyState& policy, const EnvironmentSpec& env, std::size_t question,
               std::size_t channel) {
  if (channel >= env.channels()) throw std::out_of_range("exact_p: channel out of range");
  const auto probs = policy.probabilities(question);
  const auto& mask = env.correct_masks[channel][question];
  double p = 0.0;
  for (std::size_t o = 0; o < probs.size(); ++o) {
    if (mask[o]) p += probs[o];
  }
  return p;
}

double expected_reward(const PolicyState& policy, const EnvironmentSpec& env) {
  double total = 0.0;
  for (std::size_t k = 0; k < env.channels(); ++k) {
    double j = 0.0;
    for (std::size_t q = 0; q < env.n_questions; ++q) {
      j += env.question_weights[q] * exact_p(policy, env, q, k);
    }
    total += j;
  }
  return total / static_cast<double>(env.channels());
}

ParameterVector exact_gradient(const PolicyState& policy, const EnvironmentSpec& env) {
  require_single_channel(env, "exact_gradient");
  ParameterVector grad(policy.logits.size(), 0.0);
  for (std::size_t q = 0; q < env.n_questions; ++q) {
    const auto probs = policy.probabilities(q);
    const double p = exact_p(policy, env, q, 0);
    const auto& mask = env.correct_masks[0][q];
    for (std::size_t o = 0; o < probs.size(); ++o) {
      grad[q * policy.actions + o] =
          env.question_weights[q] * probs[o] * (static_cast<double>(mask[o]) - p);
    }
  }
  return grad;
}

MomentEstimate population_moments(const PolicyState& policy, const EnvironmentSpec& env,
                                  std::size_t channel) {
  std::vector<double> ps(env.n_questions);
  for (std::size_t q = 0; q < env.n_questions; ++q) ps[q] = exact_p(policy, env, q, channel);
  return beta::weighted_moments(ps, env.question_weights);
}

BatchContext oracle_context(const PolicyState& policy, const EnvironmentSpec& env) {
  BatchContext ctx;
  for (std::size_t k = 0; k < env.channels(); ++k) {
    ctx.population_moments.push_back(population_moments(policy, env, k));
  }
  return ctx;
}

ParameterVector expected_estimator_gradient(const PolicyState& policy,
                                            const EnvironmentSpec& env,
                                            const EstimatorSpec& spec) {
  require_single_channel(env, "expected_estimator_gradient");
  if (spec.baseline != BaselineMode::OracleP) {
    throw std::invalid_argument("expected_estimator_gradient: requires an OracleP spec");
  }
  ParameterVector grad = exact_gradient(policy, env);
  std::optional<BetaParams> normalizer;
  if (const auto* fixed = std::get_if<BnpoFixed>(&spec.kind)) normalizer = fixed->params;
  if (std::holds_alternative<BnpoAdaptive>(spec.kind)) {
    std::vector<GroupRollout> none;
    normalizer = fit_batch_params(none, 0, spec, population_moments(policy, env, 0)).normalizer;
  }
  for (std::size_t q = 0; q < env.n_questions; ++q) {
    const double p = exact_p(policy, env, q, 0);
    double scale = 1.0;
    if (p <= 0.0 || p >= 1.0) {
      scale = std::holds_alternative<Reinforce>(spec.kind) ? 1.0 : 0.0;
    } else if (std::holds_alternative<Grpo>(spec.kind)) {
      double sigma = std::sqrt(p * (1.0 - p));
      if (spec.degenerate.kind == DegeneratePolicy::Kind::EpsilonStd) {
        sigma += spec.degenerate.epsilon;
      }
      scale = 1.0 / sigma;
    } else if (normalizer) {
      scale = std::exp(-beta::log_pdf(p, *normalizer));
    }
    for (std::size_t o = 0; o < policy.actions; ++o) grad[q * policy.actions + o] *= scale;
  }
  return grad;
}

std::vector<GroupRollout> rollout(const PolicyState& policy, const EnvironmentSpec& env,
                                  std::size_t batch_size, std::size_t group_size,
                                  std::uint64_t seed, std::uint64_t step) {
  if (batch_size == 0) throw std::invalid_argument("rollout: batch_size must be positive");
  if (group_size < 2) throw std::invalid_argument("rollout: group_size must be >= 2");
  RandomStream question_rng = RandomStream::derive(seed, {step, 0});
  std::vector<std::size_t> questions(batch_size);
  for (auto& q : questions) q = sample_index(env.question_weights, question_rng);

  std::vector<GroupRollout> batch;
  batch.reserve(batch_size);
  for (std::size_t g = 0; g < batch_size; ++g) {
    const std::size_t q = questions[g];
    RandomStream rng = RandomStream::derive(seed, {step, 1, g});
    const auto probs = policy.probabilities(q);
    std::vector<std::size_t> actions(group_size);
    for (auto& a : actions) a = sample_index(probs, rng);
    std::vector<std::vector<std::uint8_t>> rewards(env.channels(),
                                                   std::vector<std::uint8_t>(group_size));
    std::vector<double> oracle(env.channels());
    for (std::size_t k = 0; k < env.channels(); ++k) {
      const auto& mask = env.correct_masks[k][q];
      for (std::size_t j = 0; j < group_size; ++j) rewards[k][j] = mask[actions[j]];
      double p = 0.0;
      for (std::size_t o = 0; o < probs.size(); ++o) {
        if (mask[o]) p += probs[o];
      }
      oracle[k] = p;
    }
    batch.push_back(GroupRollout::from_rewards(q, std::move(rewards), std::move(oracle),
                                               std::move(actions)));
  }
  return batch;
}

ParameterVector estimate_gradient(const PolicyState& policy,
                                  std::span<const GroupRollout> rollouts,
                                  const BatchAdvantages& advantages) {
  check_alignment(rollouts, advantages);
  return accumulate(policy, rollouts,
                    [&](std::size_t g, std::size_t j) { return advantages.values[g][j]; });
}

double ppo_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

ParameterVector surrogate_gradient(const PolicyState& policy, const PolicyState& old_policy,
                                   std::span<const GroupRollout> rollouts,
                                   const BatchAdvantages& advantages, double eps) {
  check_alignment(rollouts, advantages);
  return accumulate(policy, rollouts, [&](std::size_t g, std::size_t j) {
    const std::size_t q = rollouts[g].question_id;
    const std::size_t o = rollouts[g].actions[j];
    const double ratio =
        std::exp(policy.log_probability(q, o) - old_policy.log_probability(q, o));
    const double a = advantages.values[g][j];
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    // The clipped branch is constant in theta; only the unclipped branch
    // contributes d(r A)/dtheta = A r grad log pi.
    return (ratio * a <= clipped * a) ? a * ratio : 0.0;
  });
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace bnpo::sim
