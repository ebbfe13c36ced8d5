#include "bnpo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "bnpo/csv_io.hpp"
#include "bnpo/special_functions.hpp"
#include "bnpo/variance_theory.hpp"

namespace bnpo::experiment {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ---- strict JSON helpers ---------------------------------------------------

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

void require_object(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": expected a JSON object");
}

void check_keys(const json& doc, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  require_object(doc, where);
  for (const auto& item : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

double get_real(const json& doc, const char* key, double fallback, const std::string& where) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + ": must be finite");
  return x;
}

std::uint64_t get_uint(const json& doc, const char* key, std::uint64_t fallback,
                       const std::string& where) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!is_count(v)) {
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& doc, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> get_real_list(const json& doc, const char* key,
                                  const std::vector<double>& fallback, const std::string& where) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<EstimatorSpec> get_estimators(const json& doc, const char* key,
                                          const std::string& where) {
  std::vector<EstimatorSpec> out;
  if (!doc.contains(key)) return out;
  const auto& v = doc.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
  for (const auto& item : v) out.push_back(estimator_from_json(item));
  return out;
}

// ---- output helpers ----------------------------------------------------------

std::string csv_cell(const ordered_json& v) {
  if (v.is_number_float()) return io::format_real(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

fs::path write_table(const fs::path& dir, const std::string& stem,
                     const std::vector<ordered_json>& rows, OutputFormat format) {
  if (format == OutputFormat::Json) {
    const fs::path path = dir / (stem + ".json");
    std::ofstream out(path);
    out << ordered_json(rows).dump(2) << '\n';
    return path;
  }
  const fs::path path = dir / (stem + ".csv");
  std::ofstream out(path);
  if (!rows.empty()) {
    bool first = true;
    for (const auto& item : rows.front().items()) {
      out << (first ? "" : ",") << item.key();
      first = false;
    }
    out << '\n';
  }
  for (const auto& row : rows) {
    bool first = true;
    for (const auto& item : row.items()) {
      out << (first ? "" : ",") << csv_cell(item.value());
      first = false;
    }
    out << '\n';
  }
  return path;
}

std::vector<fs::path> write_trace(const fs::path& dir, const std::string& stem,
                                  const std::vector<sim::StepRecord>& steps, std::size_t channels,
                                  OutputFormat format) {
  std::vector<fs::path> files;
  if (format == OutputFormat::Csv) {
    const fs::path path = dir / (stem + ".csv");
    std::ofstream out(path);
    io::write_trace_csv(out, steps);
    files.push_back(path);
    if (channels > 1) {
      const fs::path extra = dir / (stem + "_channels.csv");
      std::ofstream cout(extra);
      io::write_channel_csv(cout, steps);
      files.push_back(extra);
    }
    return files;
  }
  ordered_json rows = ordered_json::array();
  for (const auto& s : steps) {
    ordered_json row;
    row["step"] = s.step;
    row["mean_reward"] = s.mean_reward;
    row["grad_norm"] = s.grad_norm;
    ordered_json chans = ordered_json::array();
    for (const auto& c : s.channels) {
      chans.push_back(ordered_json{{"a", c.a},       {"b", c.b},          {"alpha", c.alpha},
                                   {"beta", c.beta}, {"mean_p", c.mean_p}, {"var_p", c.var_p}});
    }
    row["channels"] = std::move(chans);
    rows.push_back(std::move(row));
  }
  const fs::path path = dir / (stem + ".json");
  std::ofstream out(path);
  out << rows.dump(2) << '\n';
  files.push_back(path);
  return files;
}

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (c == '(' || c == ')' || c == ',') c = '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

// Checks the invariants of a finished trace; returns failure reasons.
std::vector<std::string> check_trace(const std::vector<sim::StepRecord>& steps,
                                     const EstimatorSpec& spec) {
  std::vector<std::string> failures;
  const bool adaptive = std::holds_alternative<BnpoAdaptive>(spec.kind);
  for (const auto& s : steps) {
    if (!std::isfinite(s.mean_reward) || !std::isfinite(s.grad_norm)) {
      failures.push_back("step " + std::to_string(s.step) + ": non-finite metrics");
    }
    if (!adaptive) continue;
    for (std::size_t k = 0; k < s.channels.size(); ++k) {
      const auto& c = s.channels[k];
      if (std::abs(c.alpha - (1.0 + c.a / 3.0)) > 1e-12 ||
          std::abs(c.beta - (1.0 + c.b / 3.0)) > 1e-12) {
        failures.push_back("step " + std::to_string(s.step) + " channel " + std::to_string(k) +
                           ": normalizer is not (1 + a/3, 1 + b/3)");
      }
    }
  }
  return failures;
}

double series_variance(const std::vector<sim::StepRecord>& steps, std::size_t from) {
  if (steps.size() <= from + 1) return 0.0;
  double mean = 0.0;
  const auto n = static_cast<double>(steps.size() - from);
  for (std::size_t i = from; i < steps.size(); ++i) mean += steps[i].grad_norm;
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = from; i < steps.size(); ++i) {
    ss += (steps[i].grad_norm - mean) * (steps[i].grad_norm - mean);
  }
  return ss / (n - 1.0);
}

}  // namespace

// ---- estimator specs ----------------------------------------------------------

std::string command_name(Command c) {
  switch (c) {
    case Command::VerifyTheorem: return "verify-theorem";
    case Command::Train: return "train";
    case Command::VarianceProbe: return "variance-probe";
    case Command::Sweep: return "sweep";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  if (name == "verify-theorem") return Command::VerifyTheorem;
  if (name == "train") return Command::Train;
  if (name == "variance-probe") return Command::VarianceProbe;
  if (name == "sweep") return Command::Sweep;
  throw ConfigError("unknown command '" + name + "'");
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "reinforce") return Reinforce{};
  if (name == "grpo") return Grpo{};
  if (name == "bnpo-adaptive") return BnpoAdaptive{};
  const std::string prefix = "bnpo-fixed:";
  if (name.rfind(prefix, 0) == 0) {
    const auto fields = io::split_csv_line(name.substr(prefix.size()));
    if (fields.size() != 2) throw ConfigError("bnpo-fixed needs ALPHA,BETA");
    try {
      return BnpoFixed{BetaParams(io::parse_real(fields[0]), io::parse_real(fields[1]))};
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bnpo-fixed: ") + e.what());
    }
  }
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string estimator_label(const EstimatorSpec& spec) {
  if (const auto* fixed = std::get_if<BnpoFixed>(&spec.kind)) {
    return "bnpo-fixed(" + io::format_real(fixed->params.alpha()) + "," +
           io::format_real(fixed->params.beta()) + ")";
  }
  return spec.name();
}

json estimator_to_json(const EstimatorSpec& spec) {
  json out;
  out["kind"] = spec.name();
  if (const auto* fixed = std::get_if<BnpoFixed>(&spec.kind)) {
    out["alpha"] = fixed->params.alpha();
    out["beta"] = fixed->params.beta();
  }
  out["baseline"] = spec.baseline == BaselineMode::GroupMean ? "group-mean" : "oracle-p";
  out["degenerate"] =
      spec.degenerate.kind == DegeneratePolicy::Kind::ZeroAdvantage ? "zero" : "epsilon-std";
  out["epsilon"] = spec.degenerate.epsilon;
  out["variance"] =
      spec.variance_convention == VarianceConvention::Population ? "population" : "sample";
  out["guard"] = json{{"mean_margin", spec.guard.mean_margin},
                      {"variance_floor", spec.guard.variance_floor},
                      {"variance_ceiling_fraction", spec.guard.variance_ceiling_fraction},
                      {"max_concentration", spec.guard.max_concentration}};
  return out;
}

EstimatorSpec estimator_from_json(const json& doc) {
  const std::string where = "estimator";
  check_keys(doc, {"kind", "alpha", "beta", "baseline", "degenerate", "epsilon", "variance", "guard"},
             where);
  if (!doc.contains("kind")) throw ConfigError("estimator: missing 'kind'");
  EstimatorSpec spec;
  const std::string kind = get_string(doc, "kind", "", where);
  if (kind == "bnpo-fixed") {
    if (!doc.contains("alpha") || !doc.contains("beta")) {
      throw ConfigError("estimator: bnpo-fixed requires alpha and beta");
    }
    try {
      spec.kind = BnpoFixed{BetaParams(get_real(doc, "alpha", 0.0, where),
                                       get_real(doc, "beta", 0.0, where))};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("estimator: ") + e.what());
    }
  } else {
    if (doc.contains("alpha") || doc.contains("beta")) {
      throw ConfigError("estimator: alpha/beta are only valid for bnpo-fixed");
    }
    spec.kind = parse_estimator_kind(kind);
  }
  const std::string baseline = get_string(doc, "baseline", "group-mean", where);
  if (baseline == "group-mean") {
    spec.baseline = BaselineMode::GroupMean;
  } else if (baseline == "oracle-p") {
    spec.baseline = BaselineMode::OracleP;
  } else {
    throw ConfigError("estimator.baseline: expected group-mean or oracle-p");
  }
  const std::string degenerate = get_string(doc, "degenerate", "zero", where);
  if (degenerate == "zero") {
    spec.degenerate.kind = DegeneratePolicy::Kind::ZeroAdvantage;
  } else if (degenerate == "epsilon-std") {
    spec.degenerate.kind = DegeneratePolicy::Kind::EpsilonStd;
  } else {
    throw ConfigError("estimator.degenerate: expected zero or epsilon-std");
  }
  spec.degenerate.epsilon = get_real(doc, "epsilon", 1e-6, where);
  if (!(spec.degenerate.epsilon > 0.0)) throw ConfigError("estimator.epsilon must be > 0");
  const std::string variance = get_string(doc, "variance", "population", where);
  if (variance == "population") {
    spec.variance_convention = VarianceConvention::Population;
  } else if (variance == "sample") {
    spec.variance_convention = VarianceConvention::Sample;
  } else {
    throw ConfigError("estimator.variance: expected population or sample");
  }
  if (doc.contains("guard")) {
    const auto& g = doc.at("guard");
    const std::string gw = "estimator.guard";
    check_keys(g, {"mean_margin", "variance_floor", "variance_ceiling_fraction", "max_concentration"},
               gw);
    spec.guard.mean_margin = get_real(g, "mean_margin", spec.guard.mean_margin, gw);
    spec.guard.variance_floor = get_real(g, "variance_floor", spec.guard.variance_floor, gw);
    spec.guard.variance_ceiling_fraction =
        get_real(g, "variance_ceiling_fraction", spec.guard.variance_ceiling_fraction, gw);
    spec.guard.max_concentration =
        get_real(g, "max_concentration", spec.guard.max_concentration, gw);
    if (!(spec.guard.mean_margin > 0.0 && spec.guard.mean_margin < 0.5) ||
        !(spec.guard.variance_floor > 0.0) ||
        !(spec.guard.variance_ceiling_fraction > 0.0 && spec.guard.variance_ceiling_fraction < 1.0) ||
        !(spec.guard.max_concentration > 0.0)) {
      throw ConfigError("estimator.guard: values out of range");
    }
  }
  return spec;
}

// ---- config ---------------------------------------------------------------------

sim::EnvironmentSpec EnvConfig::build() const {
  sim::EnvironmentSpec env = sim::EnvironmentSpec::uniform(questions, actions, correct_actions,
                                                           channels);
  if (!weights.empty()) {
    env.question_weights = weights;
    env.validate();
  }
  return env;
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, {"command", "env", "train", "theory", "probe", "sweep", "output"}, "config");
  ExperimentConfig cfg;
  if (!doc.contains("command")) throw ConfigError("config: missing 'command'");
  cfg.command = parse_command(get_string(doc, "command", "", "config"));

  if (doc.contains("env")) {
    const auto& e = doc.at("env");
    const std::string w = "env";
    check_keys(e, {"questions", "actions", "correct_actions", "channels", "weights"}, w);
    cfg.env.questions = get_uint(e, "questions", cfg.env.questions, w);
    cfg.env.actions = get_uint(e, "actions", cfg.env.actions, w);
    cfg.env.correct_actions = get_uint(e, "correct_actions", cfg.env.correct_actions, w);
    cfg.env.channels = get_uint(e, "channels", cfg.env.channels, w);
    cfg.env.weights = get_real_list(e, "weights", {}, w);
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    const std::string w = "train";
    check_keys(t, {"steps", "ppo_iterations", "batch_size", "group_size", "clip_epsilon",
                   "learning_rate", "seed", "estimator"},
               w);
    cfg.train.steps = get_uint(t, "steps", cfg.train.steps, w);
    cfg.train.ppo_iterations = get_uint(t, "ppo_iterations", cfg.train.ppo_iterations, w);
    cfg.train.batch_size = get_uint(t, "batch_size", cfg.train.batch_size, w);
    cfg.train.group_size = get_uint(t, "group_size", cfg.train.group_size, w);
    cfg.train.clip_epsilon = get_real(t, "clip_epsilon", cfg.train.clip_epsilon, w);
    cfg.train.learning_rate = get_real(t, "learning_rate", cfg.train.learning_rate, w);
    cfg.train.seed = get_uint(t, "seed", cfg.train.seed, w);
    if (t.contains("estimator")) cfg.train.estimator = estimator_from_json(t.at("estimator"));
  }
  if (doc.contains("theory")) {
    const auto& t = doc.at("theory");
    const std::string w = "theory";
    check_keys(t, {"grid", "argmin_tol", "stationarity_tol", "newton_tol", "boundary_eps",
                   "mc_samples", "mc_seed", "mc_z"},
               w);
    cfg.theory.grid = get_real_list(t, "grid", cfg.theory.grid, w);
    cfg.theory.argmin_tol = get_real(t, "argmin_tol", cfg.theory.argmin_tol, w);
    cfg.theory.stationarity_tol = get_real(t, "stationarity_tol", cfg.theory.stationarity_tol, w);
    cfg.theory.newton_tol = get_real(t, "newton_tol", cfg.theory.newton_tol, w);
    cfg.theory.boundary_eps = get_real_list(t, "boundary_eps", cfg.theory.boundary_eps, w);
    cfg.theory.mc_samples = get_uint(t, "mc_samples", cfg.theory.mc_samples, w);
    cfg.theory.mc_seed = get_uint(t, "mc_seed", cfg.theory.mc_seed, w);
    cfg.theory.mc_z = get_real(t, "mc_z", cfg.theory.mc_z, w);
  }
  if (doc.contains("probe")) {
    const auto& p = doc.at("probe");
    const std::string w = "probe";
    check_keys(p, {"a", "b", "questions", "batch_size", "group_size", "trials", "seed",
                   "estimators"},
               w);
    cfg.probe.a = get_real(p, "a", cfg.probe.a, w);
    cfg.probe.b = get_real(p, "b", cfg.probe.b, w);
    cfg.probe.questions = get_uint(p, "questions", cfg.probe.questions, w);
    cfg.probe.batch_size = get_uint(p, "batch_size", cfg.probe.batch_size, w);
    cfg.probe.group_size = get_uint(p, "group_size", cfg.probe.group_size, w);
    cfg.probe.trials = get_uint(p, "trials", cfg.probe.trials, w);
    cfg.probe.seed = get_uint(p, "seed", cfg.probe.seed, w);
    cfg.probe.estimators = get_estimators(p, "estimators", w);
  }
  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    const std::string w = "sweep";
    check_keys(s, {"estimators", "seeds"}, w);
    cfg.sweep.estimators = get_estimators(s, "estimators", w);
    if (s.contains("seeds")) {
      if (!s.at("seeds").is_array()) throw ConfigError("sweep.seeds: expected an array");
      for (const auto& v : s.at("seeds")) {
        if (!is_count(v)) throw ConfigError("sweep.seeds: expected integers");
        cfg.sweep.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    check_keys(o, {"directory", "format"}, "output");
    cfg.output.directory = get_string(o, "directory", cfg.output.directory, "output");
    const std::string format = get_string(o, "format", "csv", "output");
    if (format == "csv") {
      cfg.output.format = OutputFormat::Csv;
    } else if (format == "json") {
      cfg.output.format = OutputFormat::Json;
    } else {
      throw ConfigError("output.format: expected csv or json");
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

void validate(const ExperimentConfig& cfg) {
  auto wrap = [](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  if (cfg.output.directory.empty()) throw ConfigError("output.directory must not be empty");
  switch (cfg.command) {
    case Command::VerifyTheorem: {
      const auto& t = cfg.theory;
      if (t.grid.empty()) throw ConfigError("theory.grid must not be empty");
      for (double v : t.grid) {
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw ConfigError("theory.grid: Beta parameters must be > 0");
        }
      }
      if (!(t.argmin_tol > 0.0) || !(t.stationarity_tol > 0.0) || !(t.newton_tol > 0.0)) {
        throw ConfigError("theory: tolerances must be > 0");
      }
      if (t.boundary_eps.size() < 2) throw ConfigError("theory.boundary_eps needs >= 2 values");
      for (double e : t.boundary_eps) {
        if (!(e > 0.0)) throw ConfigError("theory.boundary_eps must be > 0");
      }
      if (t.mc_samples < 100) throw ConfigError("theory.mc_samples must be >= 100");
      if (!(t.mc_z > 0.0)) throw ConfigError("theory.mc_z must be > 0");
      break;
    }
    case Command::Train:
      wrap([&] {
        cfg.env.build();
        cfg.train.validate();
      });
      break;
    case Command::VarianceProbe: {
      const auto& p = cfg.probe;
      if (p.estimators.size() < 2) {
        throw ConfigError("probe.estimators: at least 2 estimator specs are required");
      }
      if (p.trials < 100) throw ConfigError("probe.trials must be >= 100");
      if (p.questions < 1 || p.batch_size < 1 || p.group_size < 2) {
        throw ConfigError("probe: questions and batch_size must be >= 1, group_size >= 2");
      }
      wrap([&] { BetaParams(p.a, p.b); });
      break;
    }
    case Command::Sweep:
      wrap([&] {
        cfg.env.build();
        cfg.train.validate();
      });
      if (cfg.sweep.estimators.empty()) throw ConfigError("sweep.estimators must not be empty");
      if (cfg.sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
      break;
  }
}

json to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["command"] = command_name(cfg.command);
  json env{{"questions", cfg.env.questions},
           {"actions", cfg.env.actions},
           {"correct_actions", cfg.env.correct_actions},
           {"channels", cfg.env.channels}};
  if (!cfg.env.weights.empty()) env["weights"] = cfg.env.weights;
  doc["env"] = env;
  doc["train"] = json{{"steps", cfg.train.steps},
                      {"ppo_iterations", cfg.train.ppo_iterations},
                      {"batch_size", cfg.train.batch_size},
                      {"group_size", cfg.train.group_size},
                      {"clip_epsilon", cfg.train.clip_epsilon},
                      {"learning_rate", cfg.train.learning_rate},
                      {"seed", cfg.train.seed},
                      {"estimator", estimator_to_json(cfg.train.estimator)}};
  doc["theory"] = json{{"grid", cfg.theory.grid},
                       {"argmin_tol", cfg.theory.argmin_tol},
                       {"stationarity_tol", cfg.theory.stationarity_tol},
                       {"newton_tol", cfg.theory.newton_tol},
                       {"boundary_eps", cfg.theory.boundary_eps},
                       {"mc_samples", cfg.theory.mc_samples},
                       {"mc_seed", cfg.theory.mc_seed},
                       {"mc_z", cfg.theory.mc_z}};
  json probe_estimators = json::array();
  for (const auto& e : cfg.probe.estimators) probe_estimators.push_back(estimator_to_json(e));
  doc["probe"] = json{{"a", cfg.probe.a},
                      {"b", cfg.probe.b},
                      {"questions", cfg.probe.questions},
                      {"batch_size", cfg.probe.batch_size},
                      {"group_size", cfg.probe.group_size},
                      {"trials", cfg.probe.trials},
                      {"seed", cfg.probe.seed},
                      {"estimators", probe_estimators}};
  json sweep_estimators = json::array();
  for (const auto& e : cfg.sweep.estimators) sweep_estimators.push_back(estimator_to_json(e));
  doc["sweep"] = json{{"estimators", sweep_estimators}, {"seeds", cfg.sweep.seeds}};
  doc["output"] = json{{"directory", cfg.output.directory},
                       {"format", cfg.output.format == OutputFormat::Csv ? "csv" : "json"}};
  return doc;
}

// ---- runners ----------------------------------------------------------------------

RunOutcome run_verify_theorem(const ExperimentConfig& cfg) {
  const auto& t = cfg.theory;
  const fs::path dir = cfg.output.directory;
  std::vector<double> eps = t.boundary_eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());

  std::vector<ordered_json> rows;
  bool all_pass = true;
  std::size_t row_index = 0;
  for (double a : t.grid) {
    for (double b : t.grid) {
      const BetaParams ab(a, b);
      const BetaParams opt = theory::optimal_params(ab);
      std::vector<std::string> reasons;
      ordered_json row;
      row["a"] = a;
      row["b"] = b;
      row["alpha_opt"] = opt.alpha();
      row["beta_opt"] = opt.beta();

      // Minimizer and stationarity.
      double argmin_err = INFINITY;
      double grad_num = INFINITY;
      int iterations = theory::kArgminMaxIterations;
      BetaParams found = opt;
      try {
        const auto res = theory::numeric_argmin(ab, t.newton_tol);
        found = res.params;
        iterations = res.iterations;
        grad_num = res.gradient_norm;
      } catch (const theory::NonConvergence& e) {
        found = e.last_iterate().params;
        grad_num = e.last_iterate().gradient_norm;
        reasons.push_back("argmin did not converge");
      }
      argmin_err = std::max(std::abs(found.alpha() - opt.alpha()),
                            std::abs(found.beta() - opt.beta()));
      const double grad_opt = theory::gradient(ab, opt).norm();
      if (!(argmin_err <= t.argmin_tol)) reasons.push_back("argmin off the closed-form optimum");
      if (!(grad_num < t.stationarity_tol) || !(grad_opt < t.stationarity_tol)) {
        reasons.push_back("gradient not stationary");
      }
      row["alpha_num"] = found.alpha();
      row["beta_num"] = found.beta();
      row["argmin_err"] = argmin_err;
      row["iterations"] = iterations;
      row["grad_norm_num"] = grad_num;
      row["grad_norm_opt"] = grad_opt;

      // Hessian.
      const auto h = theory::hessian_check(ab);
      if (!h.positive_definite) reasons.push_back("Hessian not positive definite");
      row["h11"] = h.h11;
      row["h22"] = h.h22;
      row["h12"] = h.h12;
      row["det"] = h.det;
      row["positive_definite"] = h.positive_definite;

      // Boundary: infinite on the walls, increasing towards the alpha wall.
      const double wall_alpha = (a + 3.0) / 2.0;
      const double wall_beta = (b + 3.0) / 2.0;
      const bool walls_infinite =
          theory::log_variance(ab, BetaParams(wall_alpha, opt.beta())).is_infinite() &&
          theory::log_variance(ab, BetaParams(opt.alpha(), wall_beta)).is_infinite();
      bool monotone = true;
      double previous = -INFINITY;
      for (double e : eps) {
        const auto l = theory::log_variance(ab, BetaParams(wall_alpha - e, opt.beta()));
        if (!l.is_finite() || !(l.value() > previous)) monotone = false;
        if (l.is_finite()) previous = l.value();
      }
      if (!walls_infinite) reasons.push_back("boundary not infinite");
      if (!monotone) reasons.push_back("L not increasing towards the boundary");
      row["boundary_infinite"] = walls_infinite;
      row["boundary_monotone"] = monotone;

      // Monte Carlo oracle at the optimum when w^2 has finite variance there
      // (alpha < (a+5)/4, beta < (b+5)/4), else at (1, 1).
      const bool opt_ok = opt.alpha() <= (a + 5.0) / 4.0 - 0.05 &&
                          opt.beta() <= (b + 5.0) / 4.0 - 0.05;
      const BetaParams mc_point = opt_ok ? opt : BetaParams(1.0, 1.0);
      const auto mc = theory::mc_weight_variance(
          ab, mc_point, t.mc_samples, t.mc_seed + row_index);
      const double closed = std::exp(theory::log_variance(ab, mc_point).value());
      const double z = (mc.estimate - closed) / mc.std_error;
      const double z_mean = mc.mean_weight / mc.mean_weight_std_error;
      if (!(std::abs(z) <= t.mc_z)) reasons.push_back("Monte Carlo disagrees with closed form");
      if (!(std::abs(z_mean) <= t.mc_z)) reasons.push_back("Monte Carlo mean weight not zero");
      row["mc_alpha"] = mc_point.alpha();
      row["mc_beta"] = mc_point.beta();
      row["mc_estimate"] = mc.estimate;
      row["mc_std_error"] = mc.std_error;
      row["closed_form"] = closed;
      row["mc_z"] = z;
      row["mc_mean_weight_z"] = z_mean;

      const bool pass = reasons.empty();
      all_pass = all_pass && pass;
      row["pass"] = pass;
      std::string joined;
      for (const auto& r : reasons) joined += (joined.empty() ? "" : "; ") + r;
      row["reason"] = joined;
      rows.push_back(std::move(row));
      ++row_index;
    }
  }
  RunOutcome out;
  out.pass = all_pass;
  out.files.push_back(write_table(dir, "verify_theorem", rows, cfg.output.format));
  out.summary = json{{"rows", rows.size()},
                     {"failed_rows", std::count_if(rows.begin(), rows.end(), [](const auto& r) {
                        return !r["pass"].template get<bool>();
                      })}};
  return out;
}

RunOutcome run_train(const ExperimentConfig& cfg) {
  const sim::EnvironmentSpec env = cfg.env.build();
  const fs::path dir = cfg.output.directory;
  RunOutcome out;
  sim::TrainTrace trace;
  std::string diverged;
  try {
    trace = sim::train(env, sim::PolicyState::zeros(env), cfg.train);
  } catch (const sim::NumericalDivergence& e) {
    trace = e.partial_trace();
    diverged = e.what();
  }
  out.files = write_trace(dir, "train", trace.steps, env.channels(), cfg.output.format);
  const auto failures = check_trace(trace.steps, cfg.train.estimator);
  out.pass = failures.empty() && diverged.empty();
  out.summary = json{{"final_mean_reward", sim::expected_reward(trace.final_policy, env)},
                     {"initial_mean_reward",
                      trace.steps.empty() ? 0.0 : trace.steps.front().mean_reward},
                     {"steps_completed", trace.steps.size()},
                     {"seed", cfg.train.seed},
                     {"estimator", estimator_label(cfg.train.estimator)},
                     {"failures", failures}};
  if (!diverged.empty()) out.summary["diverged"] = diverged;
  return out;
}

RunOutcome run_variance_probe(const ExperimentConfig& cfg) {
  const auto& p = cfg.probe;
  const auto problem = sim::beta_quantile_problem(BetaParams(p.a, p.b), p.questions);
  const sim::ProbeConfig probe{p.trials, p.batch_size, p.group_size, p.seed};

  struct Entry {
    std::string label;
    sim::ProbeResult result;
  };
  std::vector<Entry> entries;
  for (const auto& spec : p.estimators) {
    entries.push_back(
        Entry{estimator_label(spec),
              sim::gradient_variance_probe(problem.policy, problem.env, spec, probe)});
  }
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return entries[x].result.trace_of_covariance < entries[y].result.trace_of_covariance;
  });

  std::vector<ordered_json> rows;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& e = entries[order[r]];
    ordered_json row;
    row["rank"] = r + 1;
    row["estimator"] = e.label;
    row["trace"] = e.result.trace_of_covariance;
    row["jackknife_se"] = e.result.trace_jackknife_se;
    const auto& best = entries[order.front()].result;
    row["gap_to_best"] = e.result.trace_of_covariance - best.trace_of_covariance;
    row["gap_se"] = r == 0 ? 0.0 : sim::paired_jackknife_se(e.result, best);
    rows.push_back(std::move(row));
  }
  RunOutcome out;
  out.pass = true;
  out.files.push_back(write_table(cfg.output.directory, "variance_probe", rows, cfg.output.format));
  out.summary = json{{"smallest_trace", entries[order.front()].label},
                     {"trials", p.trials}};
  return out;
}

RunOutcome run_sweep(const ExperimentConfig& cfg) {
  const sim::EnvironmentSpec env = cfg.env.build();
  const fs::path dir = cfg.output.directory;
  RunOutcome out;
  out.pass = true;
  std::vector<ordered_json> rows;
  for (const auto& spec : cfg.sweep.estimators) {
    for (std::uint64_t seed : cfg.sweep.seeds) {
      sim::TrainConfig tc = cfg.train;
      tc.estimator = spec;
      tc.seed = seed;
      sim::TrainTrace trace;
      bool diverged = false;
      try {
        trace = sim::train(env, sim::PolicyState::zeros(env), tc);
      } catch (const sim::NumericalDivergence& e) {
        trace = e.partial_trace();
        diverged = true;
      }
      const std::string stem =
          "train_" + file_safe(estimator_label(spec)) + "_seed" + std::to_string(seed);
      for (auto& f : write_trace(dir, stem, trace.steps, env.channels(), cfg.output.format)) {
        out.files.push_back(f);
      }
      const auto failures = check_trace(trace.steps, spec);
      const bool pass = failures.empty() && !diverged;
      out.pass = out.pass && pass;
      ordered_json row;
      row["estimator"] = estimator_label(spec);
      row["seed"] = seed;
      row["final_mean_reward"] = sim::expected_reward(trace.final_policy, env);
      row["grad_norm_variance"] = series_variance(trace.steps, trace.steps.size() / 4);
      row["diverged"] = diverged;
      row["pass"] = pass;
      rows.push_back(std::move(row));
    }
  }
  out.files.push_back(write_table(dir, "sweep", rows, cfg.output.format));
  out.summary = json{{"runs", rows.size()}};
  return out;
}

int run(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path dir = cfg.output.directory;
  fs::create_directories(dir);
  RunOutcome outcome;
  switch (cfg.command) {
    case Command::VerifyTheorem: outcome = run_verify_theorem(cfg); break;
    case Command::Train: outcome = run_train(cfg); break;
    case Command::VarianceProbe: outcome = run_variance_probe(cfg); break;
    case Command::Sweep: outcome = run_sweep(cfg); break;
  }
  const json summary{{"command", command_name(cfg.command)},
                     {"config", to_json(cfg)},
                     {"results", outcome.summary},
                     {"pass", outcome.pass}};
  const fs::path summary_path = dir / "summary.json";
  {
    std::ofstream out(summary_path);
    out << summary.dump(2) << '\n';
  }
  for (const auto& f : outcome.files) log << "wrote " << f.string() << '\n';
  log << "wrote " << summary_path.string() << '\n';
  log << command_name(cfg.command) << ": " << (outcome.pass ? "PASS" : "FAIL") << '\n';
  if (outcome.pass) return kExitOk;
  if (outcome.summary.contains("diverged")) return kExitDiverged;
  return kExitCheckFailed;
}

}  // namespace bnpo::experiment
