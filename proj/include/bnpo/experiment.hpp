#pragma once

// Configuration-driven experiment runner: theorem verification sweeps,
// gradient-variance probes, training runs, and estimator x seed sweeps.
// Each run writes its data files plus a JSON summary
//   {"command", "config", "results", "pass"}
// whose "config" member is a complete config that reruns the experiment.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bnpo/advantage.hpp"
#include "bnpo/sim_env.hpp"

namespace bnpo::experiment {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Command { VerifyTheorem, Train, VarianceProbe, Sweep };
enum class OutputFormat { Csv, Json };

struct EnvConfig {
  std::size_t questions = 8;
  std::size_t actions = 2;
  std::size_t correct_actions = 1;
  std::size_t channels = 1;
  /// Empty means uniform.
  std::vector<double> weights;

  sim::EnvironmentSpec build() const;
};

struct TheoryConfig {
  std::vector<double> grid{0.5, 1.0, 2.0, 3.0, 5.0, 10.0};
  double argmin_tol = 1e-6;
  double stationarity_tol = 1e-8;
  double newton_tol = 1e-8;
  std::vector<double> boundary_eps{0.1, 0.01, 0.001};
  std::size_t mc_samples = 200000;
  std::uint64_t mc_seed = 20240601;
  /// Allowed |MC - closed form| in standard errors.
  double mc_z = 4.0;
};

struct ProbeSection {
  double a = 2.0;
  double b = 3.0;
  std::size_t questions = 16;
  std::size_t batch_size = 16;
  std::size_t group_size = 4;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::vector<EstimatorSpec> estimators;
};

struct SweepSection {
  std::vector<EstimatorSpec> estimators;
  std::vector<std::uint64_t> seeds;
};

struct OutputConfig {
  std::string directory = "out";
  OutputFormat format = OutputFormat::Csv;
};

struct ExperimentConfig {
  Command command = Command::Train;
  EnvConfig env;
  sim::TrainConfig train;
  TheoryConfig theory;
  ProbeSection probe;
  SweepSection sweep;
  OutputConfig output;
};

/// Strict parse: unknown keys, wrong types, and values violating the
/// owning types' invariants throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks command-specific requirements (nonempty grid, >= 2 probe
/// estimators, trials >= 100, ...). Throws ConfigError.
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json estimator_to_json(const EstimatorSpec& spec);
EstimatorSpec estimator_from_json(const nlohmann::json& doc);

/// Parses reinforce | grpo | bnpo-adaptive | bnpo-fixed:ALPHA,BETA.
EstimatorKind parse_estimator_kind(const std::string& name);

/// Display label, e.g. "bnpo-fixed(1.5,1.5)".
std::string estimator_label(const EstimatorSpec& spec);

std::string command_name(Command c);
Command parse_command(const std::string& name);

struct RunOutcome {
  bool pass = false;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

RunOutcome run_verify_theorem(const ExperimentConfig& cfg);
RunOutcome run_train(const ExperimentConfig& cfg);
RunOutcome run_variance_probe(const ExperimentConfig& cfg);
RunOutcome run_sweep(const ExperimentConfig& cfg);

/// Dispatches on cfg.command, writes summary.json, and returns the process
/// exit status: 0 iff every internal check passed.
int run(const ExperimentConfig& cfg, std::ostream& log);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

}  // namespace bnpo::experiment
