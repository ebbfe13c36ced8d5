// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bnpo/advantage.hpp"
#include "bnpo/beta_model.hpp"
#include "bnpo/csv_io.hpp"
#include "bnpo/sim_env.hpp"
#include "bnpo/special_functions.hpp"
#include "bnpo/variance_theory.hpp"

using namespace bnpo;

namespace {

const double kGrid[] = {0.5, 1.0, 2.0, 3.0, 5.0, 10.0};

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;  // 0 means no runtime requirement
  std::function<Outcome()> run;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

GroupRollout random_group(RandomStream& rng, std::size_t m, std::size_t channels = 1) {
  std::vector<std::vector<std::uint8_t>> rewards(channels, std::vector<std::uint8_t>(m));
  std::vector<double> oracle(channels);
  for (std::size_t k = 0; k < channels; ++k) {
    oracle[k] = rng.uniform();
    for (auto& r : rewards[k]) r = rng.uniform() < oracle[k] ? 1 : 0;
  }
  return GroupRollout::from_rewards(0, std::move(rewards), std::move(oracle));
}

Outcome minimizer() {
  Outcome out;
  double worst_err = 0.0, worst_grad = 0.0;
  int pd = 0;
  for (double a : kGrid) {
    for (double b : kGrid) {
      const BetaParams ab(a, b);
      const auto opt = theory::optimal_params(ab);
      try {
        const auto r = theory::numeric_argmin(ab);
        worst_err = std::max({worst_err, std::abs(r.params.alpha() - opt.alpha()),
                              std::abs(r.params.beta() - opt.beta())});
      } catch (const theory::NonConvergence&) {
        out.pass = false;
        worst_err = INFINITY;
      }
      worst_grad = std::max(worst_grad, theory::gradient(ab, opt).norm());
      pd += theory::hessian_check(ab).positive_definite ? 1 : 0;
    }
  }
  out.pass = out.pass && worst_err <= 1e-6 && worst_grad < 1e-8 && pd == 36;
  out.detail = fmt("max |argmin - (1+a/3,1+b/3)| = %.2e, max |grad| = %.2e, PD %d/36",
                   worst_err, worst_grad, pd);
  return out;
}

Outcome boundary() {
  Outcome out;
  int probes = 0, mismatches = 0, monotone = 0;
  for (double a : kGrid) {
    for (double b : kGrid) {
      const BetaParams ab(a, b);
      const double wa = (a + 3.0) / 2.0, wb = (b + 3.0) / 2.0;
      for (double al : {0.3 * wa, std::nextafter(wa, 0.0), wa, std::nextafter(wa, 2 * wa), 2 * wa}) {
        for (double be : {0.3 * wb, std::nextafter(wb, 0.0), wb, std::nextafter(wb, 2 * wb), 2 * wb}) {
          const bool outside = al >= wa || be >= wb;
          ++probes;
          if (theory::log_variance(ab, BetaParams(al, be)).is_infinite() != outside) ++mismatches;
        }
      }
      const double beta0 = 1.0 + b / 3.0;
      double prev = -INFINITY;
      bool up = true;
      for (double eps : {0.1, 0.01, 0.001}) {
        const double l = theory::log_variance(ab, BetaParams(wa - eps, beta0)).or_infinity();
        up = up && std::isfinite(l) && l > prev;
        prev = l;
      }
      monotone += up ? 1 : 0;
    }
  }
  out.pass = mismatches == 0 && monotone == 36;
  out.detail = fmt("marker mismatches %d/%d probes, monotone along alpha wall %d/36", mismatches,
                   probes, monotone);
  return out;
}

Outcome monte_carlo() {
  // Inside the MC margin and, except for the spec's reference optimum
  // (2,3)@(5/3,2), inside the region where w^2 has finite variance too.
  const struct {
    double a, b, alpha, beta;
  } cases[] = {
      {2, 3, 1, 1},     {2, 3, 5.0 / 3, 2},       {2, 3, 1.5, 1.5},          {1, 1, 4.0 / 3, 4.0 / 3},
      {0.5, 0.5, 1, 1}, {2, 2, 5.0 / 3, 5.0 / 3}, {1, 2, 4.0 / 3, 5.0 / 3}, {0.5, 5, 1.1, 2.0},
      {5, 5, 2, 2},     {10, 10, 3, 3},           {3, 6, 1.5, 2.5},          {10, 2, 3, 1.5},
  };
  Outcome out;
  double worst_z = 0.0, worst_mean_z = 0.0;
  int agree = 0;
  std::uint64_t seed = 31337;
  for (const auto& c : cases) {
    const BetaParams ab(c.a, c.b), ref(c.alpha, c.beta);
    const auto mc = theory::mc_weight_variance(ab, ref, 1000000, seed++);
    const double closed = std::exp(theory::log_variance(ab, ref).value());
    const double z = std::abs(mc.estimate - closed) / mc.std_error;
    const double zm = std::abs(mc.mean_weight) / mc.mean_weight_std_error;
    worst_z = std::max(worst_z, z);
    worst_mean_z = std::max(worst_mean_z, zm);
    agree += z <= 3.0 ? 1 : 0;
  }
  const double ref = std::exp(theory::log_variance(BetaParams(2, 3), BetaParams(1, 1)).value());
  out.pass = agree == 12 && std::abs(ref - 0.2) < 1e-14;
  out.detail = fmt("%d/12 within 3 SE (max z %.2f, max |E[w]| z %.2f); (2,3)@(1,1) closed form %.15g",
                   agree, worst_z, worst_mean_z, ref);
  return out;
}

Outcome reductions() {
  RandomStream rng(4242);
  const double scale = std::numbers::pi / 8.0;
  int bitwise = 0;
  double worst = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto g = random_group(rng, 2 + rng.below(31));
    const EstimatorSpec spec{Grpo{}, i % 2 == 0 ? BaselineMode::GroupMean : BaselineMode::OracleP};
    bitwise += bnpo_advantage(g, 0, BetaParams(1, 1), spec) == reinforce_advantage(g, 0, spec.baseline);
    const auto bn = bnpo_advantage(g, 0, BetaParams(1.5, 1.5), spec);
    const auto gr = grpo_advantage(g, 0, spec);
    for (std::size_t j = 0; j < bn.size(); ++j) worst = std::max(worst, std::abs(bn[j] - gr[j] * scale));
  }
  Outcome out;
  out.pass = bitwise == n && worst <= 1e-12;
  out.detail = fmt("REINFORCE bitwise %d/%d, max |bnpo(3/2,3/2) - grpo*pi/8| = %.2e", bitwise, n, worst);
  return out;
}

Outcome moment_fitting() {
  RandomStream rng(25);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = beta::sample(BetaParams(2, 5), rng);
  const auto fit = beta::fit_moments(beta::moments(xs));
  const double ea = std::abs(fit.alpha() - 2.0) / 2.0, eb = std::abs(fit.beta() - 5.0) / 5.0;
  double worst = 0.0;
  for (double a : kGrid) {
    for (double b : kGrid) {
      const BetaParams ab(a, b);
      const auto r = beta::fit_moments(MomentEstimate{beta::mean(ab), beta::variance(ab), 2});
      worst = std::max({worst, std::abs(r.alpha() - a) / a, std::abs(r.beta() - b) / b});
    }
  }
  Outcome out;
  out.pass = ea <= 0.05 && eb <= 0.05 && worst <= 1e-9;
  out.detail = fmt("Beta(2,5) from 1e5 draws -> (%.4f, %.4f); analytic round trip max rel err %.2e",
                   fit.alpha(), fit.beta(), worst);
  return out;
}

Outcome unbiasedness() {
  const auto env = sim::EnvironmentSpec::uniform(4, 2, 1);
  sim::PolicyState policy = sim::PolicyState::zeros(env);
  const double ps[] = {0.2, 0.4, 0.6, 0.8};
  for (std::size_t q = 0; q < 4; ++q) policy.logits[2 * q] = std::log(ps[q] / (1.0 - ps[q]));
  const auto exact = sim::exact_gradient(policy, env);

  Outcome out;
  std::string literal, own;
  const std::pair<const char*, EstimatorKind> kinds[] = {
      {"reinforce", Reinforce{}}, {"grpo", Grpo{}}, {"bnpo-adaptive", BnpoAdaptive{}}};
  for (const auto& [name, kind] : kinds) {
    const EstimatorSpec spec{kind, BaselineMode::OracleP};
    const auto mg = sim::mean_gradient_estimate(policy, env, spec, 10000, 4, 4, 606);
    const auto target = sim::expected_estimator_gradient(policy, env, spec);
    double z_exact = 0.0, z_target = 0.0;
    for (std::size_t c = 0; c < exact.size(); ++c) {
      z_exact = std::max(z_exact, std::abs(mg.mean[c] - exact[c]) / mg.std_error[c]);
      z_target = std::max(z_target, std::abs(mg.mean[c] - target[c]) / mg.std_error[c]);
    }
    out.pass = out.pass && z_exact <= 3.0;
    literal += fmt(" %s %.1f", name, z_exact);
    own += fmt(" %s %.1f", name, z_target);
  }
  out.detail = "max z vs exact_gradient:" + literal +
               "; vs per-question normalized expectation:" + own;
  return out;
}

Outcome variance_ordering() {
  const auto problem = sim::beta_quantile_problem(BetaParams(2, 3), 16);
  const sim::ProbeConfig cfg{10000, 16, 4, 7};
  auto probe = [&](const BetaParams& params) {
    return sim::gradient_variance_probe(problem.policy, problem.env,
                                        EstimatorSpec{BnpoFixed{params}, BaselineMode::OracleP}, cfg);
  };
  const auto best = probe(theory::optimal_params(BetaParams(2, 3)));
  const auto grpo = probe(BetaParams(1.5, 1.5));
  const auto reinforce = probe(BetaParams(1, 1));
  const double gap_g = grpo.trace_of_covariance - best.trace_of_covariance;
  const double gap_r = reinforce.trace_of_covariance - best.trace_of_covariance;
  const double se_g = sim::paired_jackknife_se(grpo, best);
  const double se_r = sim::paired_jackknife_se(reinforce, best);
  Outcome out;
  out.pass = gap_g > 2.0 * se_g && gap_r > 2.0 * se_r;
  out.detail = fmt("trace optimal %.5g, (3/2,3/2) %.5g (gap %.2f SE), (1,1) %.5g (gap %.2f SE)",
                   best.trace_of_covariance, grpo.trace_of_covariance, gap_g / se_g,
                   reinforce.trace_of_covariance, gap_r / se_r);
  return out;
}

Outcome end_to_end() {
  const auto env = sim::EnvironmentSpec::uniform(8, 2, 1);
  sim::TrainConfig cfg;  // S = 200, T = 1, m = 16, adaptive BNPO
  cfg.seed = 8;
  const auto run = [&] { return sim::train(env, sim::PolicyState::zeros(env), cfg); };
  const auto trace = run();
  std::ostringstream first, second;
  io::write_trace_csv(first, trace.steps);
  io::write_trace_csv(second, run().steps);
  double worst = 0.0;
  for (const auto& s : trace.steps) {
    const auto& c = s.channels[0];
    worst = std::max({worst, std::abs(c.alpha - (1 + c.a / 3)), std::abs(c.beta - (1 + c.b / 3))});
  }
  const double start = trace.steps.front().mean_reward;
  const double end = sim::expected_reward(trace.final_policy, env);
  Outcome out;
  out.pass = std::abs(start - 0.5) < 0.05 && end > 0.9 && worst <= 1e-12 &&
             first.str() == second.str() && trace.steps.size() == 200;
  out.detail = fmt("mean reward %.4f -> %.4f, max |alpha - (1+a/3)| = %.1e, rerun byte-identical: %s",
                   start, end, worst, first.str() == second.str() ? "yes" : "no");
  return out;
}

Outcome special_functions() {
  namespace sf = special;
  double rec = 0.0, fd = 0.0;
  bool symmetric = true, convex = true;
  for (double x : {0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
    rec = std::max(rec, std::abs(sf::digamma(x + 1) - sf::digamma(x) - 1 / x));
    rec = std::max(rec, std::abs(sf::trigamma(x + 1) - sf::trigamma(x) + 1 / (x * x)));
  }
  const double h = 1e-5;
  fd = std::max(fd, std::abs((sf::log_gamma(3 + h) - sf::log_gamma(3 - h)) / (2 * h) - sf::digamma(3)));
  fd = std::max(fd, std::abs((sf::digamma(4 + h) - sf::digamma(4 - h)) / (2 * h) - sf::trigamma(4)));
  for (double x = 0.05; x < 500; x *= 1.7) {
    for (double y = 0.02; y < 500; y *= 2.1) symmetric = symmetric && sf::log_beta(x, y) == sf::log_beta(y, x);
  }
  auto f = [](double x) { return 1.0 / sf::trigamma(x); };
  int pairs = 0;
  for (int i = 1; i <= 100; ++i) {
    for (int j = 1; j <= 100; ++j) {
      const double x = 0.1 * i, y = 0.1 * j;
      convex = convex && f(x + y) > f(x) + f(y);
      ++pairs;
    }
  }
  Outcome out;
  out.pass = rec <= 1e-10 && fd <= 1e-6 && symmetric && convex;
  out.detail = fmt("recurrence err %.1e, finite-difference err %.1e, symmetry %s, "
                   "1/psi1 superadditive on %d grid pairs: %s",
                   rec, fd, symmetric ? "exact" : "broken", pairs, convex ? "yes" : "no");
  return out;
}

Outcome decomposition() {
  const auto g = GroupRollout::from_rewards(0, {{1, 0, 1, 0}, {0, 0, 0, 1}});
  const std::vector<BetaParams> ones(2, BetaParams(1, 1));
  const double example = decomposed_advantage(g, ones, EstimatorSpec{})[0];
  RandomStream rng(1010);
  int single = 0, halving = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto grp = random_group(rng, 2 + rng.below(15));
    const BetaParams p(0.3 + 4 * rng.uniform(), 0.3 + 4 * rng.uniform());
    const std::vector<BetaParams> one = {p};
    const auto base = bnpo_advantage(grp, 0, p, EstimatorSpec{});
    single += decomposed_advantage(grp, one, EstimatorSpec{}) == base;
    const auto pair = GroupRollout::from_rewards(
        0, {grp.rewards[0], std::vector<std::uint8_t>(grp.group_size(), 1)});
    const std::vector<BetaParams> two = {p, BetaParams(2, 2)};
    const auto half = decomposed_advantage(pair, two, EstimatorSpec{});
    bool ok = true;
    for (std::size_t j = 0; j < half.size(); ++j) ok = ok && half[j] == base[j] / 2;
    halving += ok;
  }
  Outcome out;
  out.pass = example == 0.125 && single == 1000 && halving == 1000;
  out.detail = fmt("K=2 example %.17g, K=1 bitwise %d/1000, degenerate-channel halving %d/1000",
                   example, single, halving);
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "minimizer, stationarity, Hessian over the (a,b) grid", 10, minimizer},
      {2, "finiteness boundary and growth towards it", 0, boundary},
      {3, "closed form vs Monte Carlo, 12 configurations, n=1e6", 60, monte_carlo},
      {4, "reductions to REINFORCE and GRPO", 0, reductions},
      {5, "method-of-moments fitting", 0, moment_fitting},
      {6, "unbiasedness against exact_gradient (OracleP, 1e4 batches)", 60, unbiasedness},
      {7, "variance ordering on the Beta(2,3) quantile policy", 0, variance_ordering},
      {8, "end-to-end training on the easy environment", 0, end_to_end},
      {9, "special-function identities", 5, special_functions},
      {10, "advantage decomposition", 0, decomposition},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = c.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt(" [over %.0f s budget]", c.budget_seconds);
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL",
                c.title.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
