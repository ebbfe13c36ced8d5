#include "bnpo/advantage.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bnpo/special_functions.hpp"

namespace bnpo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_channel(const GroupRollout& group, std::size_t channel) {
  if (channel >= group.channels()) {
    throw std::out_of_range("advantage: channel " + std::to_string(channel) +
                            " out of range (K = " + std::to_string(group.channels()) + ")");
  }
}

bool is_degenerate(double p) { return p <= 0.0 || p >= 1.0; }

FittedParams fit_from(const MomentEstimate& raw, const DegeneracyGuard& guard) {
  const BetaParams data = beta::fit_moments(raw, guard);
  return FittedParams{raw, data,
                      BetaParams(1.0 + data.alpha() / 3.0, 1.0 + data.beta() / 3.0)};
}

MomentEstimate batch_moments(std::span<const GroupRollout> batch, std::size_t channel,
                             const EstimatorSpec& spec) {
  std::vector<double> rates;
  rates.reserve(batch.size());
  for (const auto& group : batch) {
    rates.push_back(baseline_probability(group, channel, spec.baseline));
  }
  return beta::moments(rates, spec.variance_convention);
}

}  // namespace

GroupRollout GroupRollout::from_rewards(std::size_t question_id,
                                        std::vector<std::vector<std::uint8_t>> rewards,
                                        std::vector<double> oracle_p,
                                        std::vector<std::size_t> actions) {
  if (rewards.empty()) throw std::invalid_argument("GroupRollout: no reward channels");
  const std::size_t m = rewards[0].size();
  if (m < 2) throw std::invalid_argument("GroupRollout: group size must be >= 2");
  GroupRollout group;
  group.question_id = question_id;
  group.p_hat.reserve(rewards.size());
  for (const auto& channel : rewards) {
    if (channel.size() != m) throw std::invalid_argument("GroupRollout: ragged reward rows");
    std::size_t hits = 0;
    for (std::uint8_t r : channel) {
      if (r > 1) throw std::invalid_argument("GroupRollout: rewards must be 0 or 1");
      hits += r;
    }
    group.p_hat.push_back(static_cast<double>(hits) / static_cast<double>(m));
  }
  if (!oracle_p.empty() && oracle_p.size() != rewards.size()) {
    throw std::invalid_argument("GroupRollout: oracle_p must have one entry per channel");
  }
  for (double p : oracle_p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("GroupRollout: oracle_p outside [0, 1]");
  }
  if (!actions.empty() && actions.size() != m) {
    throw std::invalid_argument("GroupRollout: actions must have one entry per output");
  }
  group.rewards = std::move(rewards);
  group.oracle_p = std::move(oracle_p);
  group.actions = std::move(actions);
  return group;
}

std::string EstimatorSpec::name() const {
  return std::visit(Overloaded{
                        [](const Reinforce&) { return std::string("reinforce"); },
                        [](const Grpo&) { return std::string("grpo"); },
                        [](const BnpoFixed&) { return std::string("bnpo-fixed"); },
                        [](const BnpoAdaptive&) { return std::string("bnpo-adaptive"); },
                    },
                    kind);
}

double baseline_probability(const GroupRollout& group, std::size_t channel,
                            BaselineMode mode) {
  require_channel(group, channel);
  if (mode == BaselineMode::GroupMean) return group.p_hat[channel];
  if (group.oracle_p.empty()) {
    throw std::invalid_argument("advantage: OracleP baseline requires oracle_p on the group");
  }
  return group.oracle_p[channel];
}

std::vector<double> reinforce_advantage(const GroupRollout& group, std::size_t channel,
                                        BaselineMode mode) {
  const double p = baseline_probability(group, channel, mode);
  const auto& rewards = group.rewards[channel];
  std::vector<double> out(rewards.size());
  for (std::size_t j = 0; j < rewards.size(); ++j) out[j] = rewards[j] - p;
  return out;
}

std::vector<double> grpo_advantage(const GroupRollout& group, std::size_t channel,
                                   const EstimatorSpec& spec) {
  const double p = baseline_probability(group, channel, spec.baseline);
  std::vector<double> out = reinforce_advantage(group, channel, spec.baseline);
  double sigma = std::sqrt(p * (1.0 - p));
  if (spec.degenerate.kind == DegeneratePolicy::Kind::EpsilonStd) {
    sigma += spec.degenerate.epsilon;
  } else if (!(sigma > 0.0)) {
    return std::vector<double>(out.size(), 0.0);
  }
  for (double& a : out) a /= sigma;
  return out;
}

std::vector<double> bnpo_advantage(const GroupRollout& group, std::size_t channel,
                                   const BetaParams& params, const EstimatorSpec& spec) {
  const double p = baseline_probability(group, channel, spec.baseline);
  std::vector<double> out = reinforce_advantage(group, channel, spec.baseline);
  if (is_degenerate(p)) return std::vector<double>(out.size(), 0.0);
  const double density = std::exp(beta::log_pdf(p, params));
  for (double& a : out) a /= density;
  return out;
}

FittedParams fit_batch_params(std::span<const GroupRollout> batch, std::size_t channel,
                              const EstimatorSpec& spec,
                              const std::optional<MomentEstimate>& population) {
  if (population) return fit_from(*population, spec.guard);
  if (batch.size() < 2) {
    throw std::invalid_argument("fit_batch_params: need at least 2 groups");
  }
  return fit_from(batch_moments(batch, channel, spec), spec.guard);
}

std::vector<double> decomposed_advantage(const GroupRollout& group,
                                         std::span<const BetaParams> per_channel_params,
                                         const EstimatorSpec& spec) {
  if (per_channel_params.size() != group.channels()) {
    throw std::invalid_argument("decomposed_advantage: expected " +
                                std::to_string(group.channels()) + " parameter pairs, got " +
                                std::to_string(per_channel_params.size()));
  }
  const std::size_t k_channels = group.channels();
  if (k_channels == 1) return bnpo_advantage(group, 0, per_channel_params[0], spec);
  std::vector<double> total(group.group_size(), 0.0);
  for (std::size_t k = 0; k < k_channels; ++k) {
    const auto part = bnpo_advantage(group, k, per_channel_params[k], spec);
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += part[j];
  }
  for (double& a : total) a /= static_cast<double>(k_channels);
  return total;
}

BatchAdvantages compute_advantages(std::span<const GroupRollout> batch,
                                   const EstimatorSpec& spec, const BatchContext& context) {
  if (batch.empty()) throw std::invalid_argument("compute_advantages: empty batch");
  const std::size_t k_channels = batch.front().channels();
  for (const auto& group : batch) {
    if (group.channels() != k_channels) {
      throw std::invalid_argument("compute_advantages: groups disagree on channel count");
    }
  }
  if (!context.population_moments.empty() &&
      context.population_moments.size() != k_channels) {
    throw std::invalid_argument("compute_advantages: population moments per channel mismatch");
  }
  const bool use_population =
      spec.baseline == BaselineMode::OracleP && !context.population_moments.empty();
  const bool adaptive = std::holds_alternative<BnpoAdaptive>(spec.kind);
  if (adaptive && !use_population && batch.size() < 2) {
    throw std::invalid_argument("compute_advantages: adaptive fitting needs at least 2 groups");
  }

  BatchAdvantages result;
  result.channels.reserve(k_channels);
  for (std::size_t k = 0; k < k_channels; ++k) {
    ChannelDiagnostics diag;
    const MomentEstimate raw =
        use_population ? context.population_moments[k] : batch_moments(batch, k, spec);
    const FittedParams fit = fit_from(raw, spec.guard);
    diag.raw = raw;
    diag.fitted = fit.data;
    diag.normalizer = std::visit(Overloaded{
                                     [](const Reinforce&) { return BetaParams(1.0, 1.0); },
                                     [](const Grpo&) { return BetaParams(1.5, 1.5); },
                                     [](const BnpoFixed& f) { return f.params; },
                                     [&](const BnpoAdaptive&) { return fit.normalizer; },
                                 },
                                 spec.kind);
    for (const auto& group : batch) {
      if (is_degenerate(baseline_probability(group, k, spec.baseline))) ++diag.degenerate_groups;
    }
    if (const auto* fixed = std::get_if<BnpoFixed>(&spec.kind)) {
      if (fixed->params.alpha() >= (fit.data.alpha() + 3.0) / 2.0 ||
          fixed->params.beta() >= (fit.data.beta() + 3.0) / 2.0) {
        result.warnings.push_back("channel " + std::to_string(k) +
                                  ": fixed (alpha, beta) outside the finite-variance region "
                                  "of the fitted (a, b)");
      }
    }
    result.channels.push_back(diag);
  }

  result.values.reserve(batch.size());
  for (const auto& group : batch) {
    std::vector<double> total(group.group_size(), 0.0);
    for (std::size_t k = 0; k < k_channels; ++k) {
      const std::vector<double> part = std::visit(
          Overloaded{
              [&](const Reinforce&) { return reinforce_advantage(group, k, spec.baseline); },
              [&](const Grpo&) { return grpo_advantage(group, k, spec); },
              [&](const BnpoFixed& f) { return bnpo_advantage(group, k, f.params, spec); },
              [&](const BnpoAdaptive&) {
                return bnpo_advantage(group, k, result.channels[k].normalizer, spec);
              },
          },
          spec.kind);
      if (k_channels == 1) {
        total = part;
      } else {
        for (std::size_t j = 0; j < total.size(); ++j) total[j] += part[j];
      }
    }
    if (k_channels > 1) {
      for (double& a : total) a /= static_cast<double>(k_channels);
    }
    result.values.push_back(std::move(total));
  }
  return result;
}

}  // namespace bnpo
