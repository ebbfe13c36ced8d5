#pragma once

// Advantage estimators for groups of binary rewards: REINFORCE with a
// group-mean baseline, GRPO, and Beta-normalized advantages (fixed or
// refit per batch), with per-channel decomposition.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bnpo/beta_model.hpp"

namespace bnpo {

/// One question's sampled group: K reward channels x m outputs.
struct GroupRollout {
  std::size_t question_id = 0;
  /// rewards[k][j] in {0, 1}: channel k, output j.
  std::vector<std::vector<std::uint8_t>> rewards;
  /// Per-channel empirical success rate (mean of the channel's rewards).
  std::vector<double> p_hat;
  /// Per-channel exact success probability, when known (simulation only).
  std::vector<double> oracle_p;
  /// Sampled action per output, when produced by the simulator.
  std::vector<std::size_t> actions;

  /// Builds a group and fills p_hat. Throws std::invalid_argument on empty
  /// channels, ragged rows, m < 2, or non-binary rewards.
  static GroupRollout from_rewards(std::size_t question_id,
                                   std::vector<std::vector<std::uint8_t>> rewards,
                                   std::vector<double> oracle_p = {},
                                   std::vector<std::size_t> actions = {});

  std::size_t channels() const noexcept { return rewards.size(); }
  std::size_t group_size() const noexcept { return rewards.empty() ? 0 : rewards[0].size(); }
};

struct Reinforce {
  friend bool operator==(const Reinforce&, const Reinforce&) = default;
};
struct Grpo {
  friend bool operator==(const Grpo&, const Grpo&) = default;
};
struct BnpoFixed {
  BetaParams params;
  friend bool operator==(const BnpoFixed&, const BnpoFixed&) = default;
};
struct BnpoAdaptive {
  friend bool operator==(const BnpoAdaptive&, const BnpoAdaptive&) = default;
};
using EstimatorKind = std::variant<Reinforce, Grpo, BnpoFixed, BnpoAdaptive>;

enum class BaselineMode {
  GroupMean,  // p estimated from the group's own rewards
  OracleP,    // exact p supplied by the environment
};

struct DegeneratePolicy {
  enum class Kind { ZeroAdvantage, EpsilonStd };
  Kind kind = Kind::ZeroAdvantage;
  /// For EpsilonStd: GRPO divides by (std + epsilon) for every group.
  double epsilon = 1e-6;
  friend bool operator==(const DegeneratePolicy&, const DegeneratePolicy&) = default;
};

struct EstimatorSpec {
  EstimatorKind kind = Reinforce{};
  BaselineMode baseline = BaselineMode::GroupMean;
  DegeneratePolicy degenerate{};
  DegeneracyGuard guard{};
  VarianceConvention variance_convention = VarianceConvention::Population;

  /// Short identifier: reinforce, grpo, bnpo-fixed, bnpo-adaptive.
  std::string name() const;
};

/// Baseline probability for `channel` under `mode`.
double baseline_probability(const GroupRollout& group, std::size_t channel,
                            BaselineMode mode);

/// A_j = R_j - p.
std::vector<double> reinforce_advantage(const GroupRollout& group, std::size_t channel,
                                        BaselineMode mode = BaselineMode::GroupMean);

/// A_j = (R_j - p) / sqrt(p (1 - p)); groups with zero spread follow
/// spec.degenerate.
std::vector<double> grpo_advantage(const GroupRollout& group, std::size_t channel,
                                   const EstimatorSpec& spec);

/// A_j = (R_j - p) / f(p; alpha, beta), evaluated in log space. For p in
/// {0, 1} every numerator is zero and the result is all zeros.
std::vector<double> bnpo_advantage(const GroupRollout& group, std::size_t channel,
                                   const BetaParams& params, const EstimatorSpec& spec);

struct FittedParams {
  MomentEstimate raw;     // moments of the batch's success rates
  BetaParams data;        // fitted (a, b)
  BetaParams normalizer;  // (1 + a/3, 1 + b/3)
};

/// Fits (a, b) to the batch's per-group success rates on `channel` and sets
/// the variance-optimal normalizer. Requires at least 2 groups.
/// With `population` set, fits to those moments instead of the batch.
FittedParams fit_batch_params(std::span<const GroupRollout> batch, std::size_t channel,
                              const EstimatorSpec& spec,
                              const std::optional<MomentEstimate>& population = std::nullopt);

/// A_j = (1/K) sum_k bnpo_advantage(channel k, params[k]).
std::vector<double> decomposed_advantage(const GroupRollout& group,
                                         std::span<const BetaParams> per_channel_params,
                                         const EstimatorSpec& spec);

struct ChannelDiagnostics {
  MomentEstimate raw;
  BetaParams fitted{1.0, 1.0};
  /// Normalizer actually applied: (1,1) for REINFORCE, (3/2,3/2) for GRPO
  /// (up to the constant B(3/2,3/2)), the fixed or fitted params otherwise.
  BetaParams normalizer{1.0, 1.0};
  std::size_t degenerate_groups = 0;
};

struct BatchAdvantages {
  /// values[g][j]: advantage of output j in group g.
  std::vector<std::vector<double>> values;
  std::vector<ChannelDiagnostics> channels;
  std::vector<std::string> warnings;
};

/// Extra information for a batch. With OracleP baselines the environment
/// can supply the exact population moments of p per channel; adaptive
/// fitting then uses them instead of the batch's sample.
struct BatchContext {
  std::vector<MomentEstimate> population_moments;
};

/// Advantages for every (group, output), averaged over channels.
BatchAdvantages compute_advantages(std::span<const GroupRollout> batch,
                                   const EstimatorSpec& spec,
                                   const BatchContext& context = {});

}  // namespace bnpo
