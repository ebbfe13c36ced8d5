// Serial reference vs OpenMP kernels. Both paths produce bit-identical
// results; only wall time should differ.
#include <benchmark/benchmark.h>

#include "bnpo/sim_env.hpp"
#include "bnpo/variance_theory.hpp"

namespace {

using bnpo::BetaParams;
using bnpo::Execution;

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_WeightVariance(benchmark::State& state) {
  const BetaParams ab(2.0, 3.0);
  const BetaParams ref(1.0, 1.0);
  for (auto _ : state) {
    auto r = bnpo::theory::mc_weight_variance(ab, ref, 200000, 7, 64, mode(state));
    benchmark::DoNotOptimize(r.estimate);
  }
  state.SetItemsProcessed(state.iterations() * 200000);
}
BENCHMARK(BM_WeightVariance)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_VarianceProbe(benchmark::State& state) {
  const auto problem = bnpo::sim::beta_quantile_problem(BetaParams(2.0, 3.0), 16);
  bnpo::EstimatorSpec spec{bnpo::BnpoAdaptive{}};
  spec.baseline = bnpo::BaselineMode::OracleP;
  const bnpo::sim::ProbeConfig cfg{1000, 16, 4, 3};
  for (auto _ : state) {
    auto r = bnpo::sim::gradient_variance_probe(problem.policy, problem.env, spec, cfg,
                                                mode(state));
    benchmark::DoNotOptimize(r.trace_of_covariance);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_VarianceProbe)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_MeanGradient(benchmark::State& state) {
  const auto env = bnpo::sim::EnvironmentSpec::uniform(4, 2, 1);
  const auto policy = bnpo::sim::PolicyState::zeros(env);
  bnpo::EstimatorSpec spec{bnpo::Grpo{}};
  spec.baseline = bnpo::BaselineMode::OracleP;
  for (auto _ : state) {
    auto r = bnpo::sim::mean_gradient_estimate(policy, env, spec, 2000, 8, 8, 11, mode(state));
    benchmark::DoNotOptimize(r.mean.data());
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_MeanGradient)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
