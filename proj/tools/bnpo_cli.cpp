#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bnpo/experiment.hpp"

namespace ex = bnpo::experiment;

namespace {

struct Options {
  std::string config;
  std::vector<double> grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> estimator;
};

int execute(ex::Command command, const Options& opts) {
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::load_config(opts.config);
    if (cfg.command != command) {
      throw ex::ConfigError("config command is '" + ex::command_name(cfg.command) +
                            "' but '" + ex::command_name(command) + "' was invoked");
    }
    if (!opts.grid.empty()) cfg.theory.grid = opts.grid;
    if (opts.seed) cfg.train.seed = *opts.seed;
    if (opts.estimator) cfg.train.estimator.kind = ex::parse_estimator_kind(*opts.estimator);
    ex::validate(cfg);
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ex::kExitConfigError;
  }
  try {
    return ex::run(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::kExitCheckFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beta-normalized policy gradient numerics lab"};
  app.require_subcommand(1);

  Options opts;
  ex::Command chosen = ex::Command::Train;

  auto* verify = app.add_subcommand("verify-theorem", "Check the variance-optimal normalizer over a grid");
  verify->add_option("--config", opts.config, "JSON config file")->required();
  verify->add_option("--grid", opts.grid, "Override the (a,b) grid values")->delimiter(',');
  verify->callback([&] { chosen = ex::Command::VerifyTheorem; });

  auto* train = app.add_subcommand("train", "Run one training job");
  train->add_option("--config", opts.config, "JSON config file")->required();
  train->add_option("--seed", opts.seed, "Override train.seed");
  train->add_option("--estimator", opts.estimator,
                    "reinforce | grpo | bnpo-adaptive | bnpo-fixed:ALPHA,BETA");
  train->callback([&] { chosen = ex::Command::Train; });

  auto* probe = app.add_subcommand("variance-probe", "Compare gradient variance across estimators");
  probe->add_option("--config", opts.config, "JSON config file")->required();
  probe->callback([&] { chosen = ex::Command::VarianceProbe; });

  auto* sweep = app.add_subcommand("sweep", "Train every estimator x seed combination");
  sweep->add_option("--config", opts.config, "JSON config file")->required();
  sweep->callback([&] { chosen = ex::Command::Sweep; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kExitConfigError;
  }
  return execute(chosen, opts);
}
