#include "j6/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "j6/errors.hpp"
#include "j6/gradcheck.hpp"
#include "j6/optimizer.hpp"
#include "j6/probgen.hpp"
#include "j6/serialize.hpp"

namespace j6::cli {
namespace {

// Raw flag values; turned into validated configs once an instance is known.
struct StrategyFlags {
  std::string strategy = "hard-j6";
  double tau = 1.0;
  double gamma = 2.0;
  double eta_h = 0.05;
  double eta_w = 0.05;
  double beta_aux = 0.5;
  std::vector<double> lambda = {0.5, 0.5};
  std::string pre_norm = "none";
  std::string align;  // empty: pick by w_mode
  std::string scale = "raw";

  StrategyConfig resolve(const ProblemInstance& instance) const {
    StrategyConfig cfg;
    cfg.kind = parse_strategy(strategy);
    cfg.tau = tau;
    cfg.gamma = gamma;
    cfg.eta_h = eta_h;
    cfg.eta_w = eta_w;
    cfg.beta_aux = beta_aux;
    if (lambda.size() != 2) throw ConfigError("--lambda takes exactly two weights");
    cfg.lambda = {lambda[0], lambda[1]};
    cfg.pre_norm = parse_pre_norm(pre_norm);
    cfg.alignment = default_alignment(instance.w_mode);
    if (!align.empty()) cfg.alignment.space = parse_alignment_space(align);
    cfg.alignment.scale = parse_alignment_scale(scale);
    cfg.validate();
    check_alignment(instance, cfg.alignment);
    return cfg;
  }
};

struct RunFlags {
  int steps = RunConfig{}.max_steps;
  double grad_tol = RunConfig{}.grad_tol;
  double loss_tol = RunConfig{}.loss_tol;
  std::optional<std::uint64_t> seed;
  double init_scale = 0.0;
  bool check_invariants = false;

  RunConfig resolve(std::uint64_t default_seed) const {
    RunConfig r;
    r.max_steps = steps;
    r.grad_tol = grad_tol;
    r.loss_tol = loss_tol;
    r.seed = seed.value_or(default_seed);
    r.init_scale = init_scale;
    r.check_invariants = check_invariants;
    r.validate();
    return r;
  }
};

/// --seed wins, then the J6_SEED environment variable, then 0.
std::uint64_t env_seed() {
  const char* raw = std::getenv("J6_SEED");
  if (raw == nullptr || *raw == '\0') return 0;
  std::uint64_t value = 0;
  const std::string_view text(raw);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("J6_SEED must be an unsigned integer, got '" + std::string(text) + "'");
  }
  return value;
}

void add_strategy_flags(CLI::App* cmd, StrategyFlags& f, bool with_kind) {
  if (with_kind) {
    cmd->add_option("--strategy", f.strategy,
                    "hard-j6 | hard-jplus | soft | static | scalarized | gradsurgery")
        ->capture_default_str();
  }
  cmd->add_option("--tau", f.tau, "softmax temperature")->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "contrast exponent (> 1)")->capture_default_str();
  cmd->add_option("--eta-h", f.eta_h, "step size for h")->capture_default_str();
  cmd->add_option("--eta-w", f.eta_w, "step size for w")->capture_default_str();
  cmd->add_option("--beta-aux", f.beta_aux, "auxiliary-group scale for hard-jplus")
      ->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "scalarization weights (two values)")
      ->expected(2)
      ->delimiter(',');
  cmd->add_option("--pre-norm", f.pre_norm, "none | maxabs")->capture_default_str();
  cmd->add_option("--align", f.align,
                  "direct | pushforward (default: direct for single-row/broadcast, "
                  "pushforward for full-matrix)");
  cmd->add_option("--scale", f.scale, "raw | cosine")->capture_default_str();
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--steps", f.steps, "maximum number of steps")->capture_default_str();
  cmd->add_option("--grad-tol", f.grad_tol, "stop when all block norms fall below")
      ->capture_default_str();
  cmd->add_option("--loss-tol", f.loss_tol, "stop when |d ob1|+|d ob2| falls below (0 = off)")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "initialization seed (fallback: $J6_SEED, then 0)");
  cmd->add_option("--init-scale", f.init_scale, "uniform init magnitude for h and w")
      ->capture_default_str();
  cmd->add_flag("--check-invariants", f.check_invariants,
                "verify zero-sum gradients and loss bounds on every forward pass");
}

/// Runs `tasks` on up to `jobs` threads; results keep declaration order.
template <class Result>
std::vector<Result> run_parallel(const std::vector<std::function<Result()>>& tasks, int jobs) {
  std::vector<std::optional<Result>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        slots[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void print_result(std::ostream& out, std::string_view label, const RunResult& r) {
  out << label << ": final ob1=" << format_double(r.final_objectives.ob1)
      << " ob2=" << format_double(r.final_objectives.ob2)
      << " stop_reason=" << to_string(r.stop_reason) << " steps=" << r.trace.size() << "\n";
}

// ---------------------------------------------------------------- gen

struct GenFlags {
  std::string family = "gaussian";
  int V = 8;
  int d = 4;
  int T = 1;
  std::optional<std::uint64_t> seed;
  std::string w_mode = "full-matrix";
  std::optional<int> v_star;
  std::string out;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
  GeneratorSpec spec;
  spec.family = parse_family(f.family);
  spec.V = f.V;
  spec.d = f.d;
  spec.T = f.T;
  spec.seed = f.seed ? *f.seed : env_seed();
  spec.w_mode = parse_wmode(f.w_mode);
  spec.v_star = f.v_star;
  const ProblemInstance inst = generate(spec);
  save_instance(inst, f.out, {spec.seed, spec.family});

  const Certificates c = certify(inst);
  out << "wrote " << f.out << " (family=" << to_string(spec.family) << " V=" << spec.V
      << " d=" << spec.d << " T=" << spec.T << " w_mode=" << to_string(spec.w_mode)
      << " seed=" << spec.seed << ")\n";
  out << "certificate heat_ratio=" << format_double(c.heat_ratio)
      << (spec.family == Family::RoleSwap ? " (< 0.05 required)" : "") << "\n";
  out << "certificate logit_alignment=" << format_double(c.logit_alignment)
      << (spec.family == Family::Conflicting ? " (< 0 required)" : "") << "\n";
  return kOk;
}

// ---------------------------------------------------------------- run

struct RunCmdFlags {
  std::string instance;
  StrategyFlags strategy;
  RunFlags run;
  std::string trace;
  std::string summary;
};

int cmd_run(const RunCmdFlags& f, std::ostream& out) {
  const ProblemInstance inst = load_instance(f.instance);
  const StrategyConfig cfg = f.strategy.resolve(inst);
  const RunConfig rcfg = f.run.resolve(env_seed());
  const RunResult result = run(inst, cfg, rcfg);
  if (!f.trace.empty()) write_trace(result, f.trace);
  if (!f.summary.empty()) {
    const std::vector<RunSummary> s = {RunSummary::from(cfg, result)};
    write_summary(s, f.summary);
  }
  print_result(out, to_string(cfg.kind), result);
  return kOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckFlags {
  std::string instance;
  double eps = 1e-5;
  std::optional<std::uint64_t> seed;
  double init_scale = 0.1;
  double inject = 0.0;
};

/// Instances checked when no -i is given: Gaussian draws in each w-mode.
std::vector<std::pair<std::string, ProblemInstance>> default_gradcheck_set() {
  std::vector<std::pair<std::string, ProblemInstance>> set;
  for (WMode mode : {WMode::SingleRow, WMode::FullMatrix}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      GeneratorSpec spec;
      spec.V = 8;
      spec.d = 6;
      spec.T = 3;
      spec.seed = seed;
      spec.w_mode = mode;
      set.emplace_back(std::string(to_string(mode)) + "/seed" + std::to_string(seed),
                       generate(spec));
    }
  }
  return set;
}

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  if (!(f.eps > 0.0)) throw ConfigError("--eps must be positive");
  std::vector<std::pair<std::string, ProblemInstance>> set;
  if (f.instance.empty()) {
    set = default_gradcheck_set();
  } else {
    set.emplace_back(f.instance, load_instance(f.instance));
  }
  const std::uint64_t seed = f.seed ? *f.seed : env_seed();
  double worst = 0.0;
  std::string worst_where;
  for (const auto& [label, inst] : set) {
    const Perturbations pert = init_perturbations(inst, f.init_scale, seed);
    const GradcheckReport rep = gradcheck(inst, pert, f.eps, f.inject);
    out << label;
    for (const BlockCheck& b : rep.blocks) {
      out << " " << b.name << "=" << format_double(b.max_rel_error);
      if (b.max_rel_error > worst) {
        worst = b.max_rel_error;
        worst_where = label + " " + std::string(b.name) + "[" + std::to_string(b.worst_row) +
                      "," + std::to_string(b.worst_col) +
                      "] analytic=" + format_double(b.analytic) +
                      " numeric=" + format_double(b.numeric);
      }
    }
    out << "\n";
  }
  out << "max relative error " << format_double(worst) << " (tolerance "
      << format_double(kGradcheckTolerance) << ")\n";
  if (worst < kGradcheckTolerance) return kOk;
  out << "FAILED worst coordinate: " << worst_where << "\n";
  return kCheckFailed;
}

// ---------------------------------------------------------------- compare

struct CompareFlags {
  std::string instance;
  std::vector<std::string> strategies;
  StrategyFlags strategy;
  RunFlags run;
  std::string out;
  std::string trace_dir;
  int jobs = 1;
};

int cmd_compare(const CompareFlags& f, std::ostream& out) {
  const ProblemInstance inst = load_instance(f.instance);
  if (f.strategies.empty()) throw ConfigError("--strategies needs at least one name");
  std::vector<StrategyConfig> configs;
  for (const std::string& name : f.strategies) {
    StrategyFlags sf = f.strategy;
    sf.strategy = name;
    configs.push_back(sf.resolve(inst));
  }
  const RunConfig rcfg = f.run.resolve(env_seed());

  std::vector<std::function<RunResult()>> tasks;
  for (const StrategyConfig& cfg : configs) {
    tasks.emplace_back([&inst, cfg, rcfg] { return run(inst, cfg, rcfg); });
  }
  const std::vector<RunResult> results = run_parallel(tasks, f.jobs);

  std::vector<RunSummary> summaries;
  for (std::size_t i = 0; i < results.size(); ++i) {
    summaries.push_back(RunSummary::from(configs[i], results[i]));
    print_result(out, to_string(configs[i].kind), results[i]);
    if (!f.trace_dir.empty()) {
      std::filesystem::create_directories(f.trace_dir);
      write_trace(results[i], std::filesystem::path(f.trace_dir) /
                                  (std::string(to_string(configs[i].kind)) + ".csv"));
    }
  }
  write_summary(summaries, f.out);
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
  std::string instance;
  std::string param;
  std::vector<std::string> values;
  StrategyFlags strategy;
  RunFlags run;
  std::string out;
  int jobs = 1;
};

double parse_value(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("sweep value '" + text + "' is not a number");
  }
  return v;
}

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
  static const std::vector<std::string> params = {"tau", "gamma", "eta_h", "eta_w",
                                                  "beta_aux"};
  if (std::find(params.begin(), params.end(), f.param) == params.end()) {
    throw ConfigError("--param must be one of tau, gamma, eta_h, eta_w, beta_aux");
  }
  if (f.values.empty()) throw ConfigError("--values needs at least one number");
  std::vector<double> values;
  for (const std::string& v : f.values) values.push_back(parse_value(v));

  const ProblemInstance inst = load_instance(f.instance);
  const RunConfig rcfg = f.run.resolve(env_seed());
  std::vector<StrategyConfig> configs;
  for (double v : values) {
    StrategyFlags sf = f.strategy;
    if (f.param == "tau") sf.tau = v;
    if (f.param == "gamma") sf.gamma = v;
    if (f.param == "eta_h") sf.eta_h = v;
    if (f.param == "eta_w") sf.eta_w = v;
    if (f.param == "beta_aux") sf.beta_aux = v;
    configs.push_back(sf.resolve(inst));
  }

  std::vector<std::function<RunResult()>> tasks;
  for (const StrategyConfig& cfg : configs) {
    tasks.emplace_back([&inst, cfg, rcfg] { return run(inst, cfg, rcfg); });
  }
  const std::vector<RunResult> results = run_parallel(tasks, f.jobs);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    SweepRow row;
    row.value = values[i];
    row.summary = RunSummary::from(configs[i], results[i]);
    if (!results[i].trace.empty() && results[i].trace.front().alpha) {
      const auto& a = *results[i].trace.front().alpha;
      row.alpha_max_step0 = *std::max_element(a.begin(), a.end());
    }
    rows.push_back(std::move(row));
    print_result(out, f.param + "=" + format_double(values[i]), results[i]);
  }
  write_sweep(f.param, rows, f.out);
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Jacobian-attributed two-objective perturbation optimizer", "j6"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic instance file");
  gen_cmd->add_option("--family", gen.family, "gaussian | conflicting | role-swap")
      ->capture_default_str();
  gen_cmd->add_option("--V", gen.V, "vocabulary size (>= 2)")->capture_default_str();
  gen_cmd->add_option("--d", gen.d, "hidden dimension (>= 1)")->capture_default_str();
  gen_cmd->add_option("--T", gen.T, "number of positions (>= 1)")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed (fallback: $J6_SEED, then 0)");
  gen_cmd->add_option("--w-mode", gen.w_mode, "full-matrix | single-row | broadcast")
      ->capture_default_str();
  gen_cmd->add_option("--v-star", gen.v_star, "embedding row for single-row w");
  gen_cmd->add_option("-o,--out", gen.out, "output instance path")->required();

  RunCmdFlags runf;
  auto* run_cmd = app.add_subcommand("run", "optimize one instance with one strategy");
  run_cmd->add_option("-i,--instance", runf.instance, "instance file")->required();
  add_strategy_flags(run_cmd, runf.strategy, true);
  add_run_flags(run_cmd, runf.run);
  run_cmd->add_option("--trace", runf.trace, "trace CSV output path");
  run_cmd->add_option("--summary", runf.summary, "summary JSON output path");

  GradcheckFlags gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic gradients to finite differences");
  gc_cmd->add_option("-i,--instance", gc.instance, "instance file (default: built-in set)");
  gc_cmd->add_option("--eps", gc.eps, "central-difference step")->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed, "seed of the evaluation point");
  gc_cmd->add_option("--init-scale", gc.init_scale, "magnitude of the evaluation point")
      ->capture_default_str();
  gc_cmd->add_option("--inject-error", gc.inject, "add to J11[0] (negative control)")
      ->group("");

  CompareFlags cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "run several strategies from one start");
  cmp_cmd->add_option("-i,--instance", cmp.instance, "instance file")->required();
  cmp_cmd->add_option("--strategies", cmp.strategies, "comma-separated strategy names")
      ->required()
      ->delimiter(',');
  add_strategy_flags(cmp_cmd, cmp.strategy, false);
  add_run_flags(cmp_cmd, cmp.run);
  cmp_cmd->add_option("-o,--out", cmp.out, "summary JSON output path")->required();
  cmp_cmd->add_option("--trace-dir", cmp.trace_dir, "write <strategy>.csv traces here");
  cmp_cmd->add_option("--jobs", cmp.jobs, "parallel runs")->capture_default_str();

  SweepFlags sw;
  auto* sw_cmd = app.add_subcommand("sweep", "one run per value of a strategy parameter");
  sw_cmd->add_option("-i,--instance", sw.instance, "instance file")->required();
  sw_cmd->add_option("--param", sw.param, "tau | gamma | eta_h | eta_w | beta_aux")->required();
  sw_cmd->add_option("--values", sw.values, "comma-separated values")
      ->required()
      ->delimiter(',');
  add_strategy_flags(sw_cmd, sw.strategy, true);
  add_run_flags(sw_cmd, sw.run);
  sw_cmd->add_option("-o,--out", sw.out, "sweep CSV output path")->required();
  sw_cmd->add_option("--jobs", sw.jobs, "parallel runs")->capture_default_str();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (app.got_subcommand(gen_cmd)) return cmd_gen(gen, out);
    if (app.got_subcommand(run_cmd)) return cmd_run(runf, out);
    if (app.got_subcommand(gc_cmd)) return cmd_gradcheck(gc, out);
    if (app.got_subcommand(cmp_cmd)) return cmd_compare(cmp, out);
    if (app.got_subcommand(sw_cmd)) return cmd_sweep(sw, out);
  } catch (const NumericError& e) {
    err << "numeric abort: " << e.what() << "\n";
    return kNumericAbort;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace j6::cli
