// specdyn: command-line front end for the specialisation-dynamics toolkit.
//
// Every command resolves a flat dotted-key configuration (defaults < config
// file < --set overrides), runs one deterministic pipeline and writes its
// artifacts plus a manifest.json into the output directory. Re-running with
// the manifest as the config file reproduces the artifacts byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include "specdyn/continual.hpp"
#include "specdyn/io.hpp"
#include "specdyn/linear_dynamics.hpp"
#include "specdyn/mc_validation.hpp"
#include "specdyn/meanfield.hpp"
#include "specdyn/parallel.hpp"
#include "specdyn/race_phase.hpp"
#include "specdyn/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specdyn;

namespace {

struct Field {
  json def;
  std::string help;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<std::string> choices;  // for string fields
};

using Schema = std::map<std::string, Field>;

class Config {
 public:
  Config(Schema schema, std::string command)
      : schema_(std::move(schema)), command_(std::move(command)) {
    for (const auto& [key, field] : schema_) values_[key] = field.def;
  }

  void load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    json j = json::parse(in);
    if (j.contains("config") && j.contains("command")) {
      // manifest re-run: the stored command must match, and the stored seed
      // applies unless overridden on the command line
      if (j["command"] != command_)
        throw std::runtime_error("manifest was produced by command '" +
                                 j["command"].get<std::string>() + "'");
      if (j.contains("seed")) manifest_seed = j["seed"].get<std::uint64_t>();
      j = j["config"];
    }
    for (const auto& [key, value] : j.items()) set(key, value);
  }

  void set_kv(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare string
    }
    set(key, value);
  }

  void set(const std::string& key, const json& value) {
    const auto it = schema_.find(key);
    if (it == schema_.end()) throw std::runtime_error("unknown config key: " + key);
    const Field& f = it->second;
    if (f.def.is_number() && !value.is_number())
      throw std::runtime_error("type mismatch for " + key + ": expected a number");
    if (f.def.is_boolean() && !value.is_boolean())
      throw std::runtime_error("type mismatch for " + key + ": expected a boolean");
    if (f.def.is_string()) {
      if (!value.is_string())
        throw std::runtime_error("type mismatch for " + key + ": expected a string");
      if (!f.choices.empty() &&
          std::find(f.choices.begin(), f.choices.end(), value.get<std::string>()) ==
              f.choices.end())
        throw std::runtime_error("invalid value for " + key + ": " + value.get<std::string>());
    }
    if (value.is_number()) {
      const double v = value.get<double>();
      if (v < f.lo || v > f.hi)
        throw std::runtime_error("out of range for " + key + ": " + std::to_string(v));
    }
    values_[key] = value;
  }

  double num(const std::string& key) const { return values_.at(key).get<double>(); }
  long integer(const std::string& key) const {
    return std::lround(values_.at(key).get<double>());
  }
  bool flag(const std::string& key) const { return values_.at(key).get<bool>(); }
  std::string str(const std::string& key) const { return values_.at(key).get<std::string>(); }
  bool has(const std::string& key) const { return values_.contains(key); }
  const json& all() const { return values_; }

  std::optional<std::uint64_t> manifest_seed;

 private:
  Schema schema_;
  std::string command_;
  json values_ = json::object();
};

struct RunContext {
  std::string command;
  fs::path out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  json extras = json::object();
  std::vector<std::string> outputs;

  std::ofstream open_output(const std::string& name) {
    outputs.push_back(name);
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return out;
  }

  void write_json(const std::string& name, const json& j) {
    auto out = open_output(name);
    out << j.dump(2) << '\n';
  }

  void finalize(const Config& cfg) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["config"] = cfg.all();
    manifest["seed"] = seed;
    manifest["jobs"] = jobs;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["outputs"] = outputs;
    for (const auto& [k, v] : extras.items()) manifest[k] = v;
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }
};

Schema meanfield_schema() {
  return {
      {"mf.p", {json(2.0), "student hidden units", 1, 64}},
      {"mf.p_star", {json(1.0), "teacher hidden units", 1, 64}},
      {"mf.d", {json(10000.0), "input dimension", 1, 1e9}},
      {"mf.gamma", {json(0.5), "task similarity", 0.0, 1.0}},
      {"mf.sigma_w", {json(1e-3), "first-layer init scale", 0.0, 1e6}},
      {"mf.eta", {json(1.0), "learning rate", 0.0, 1e6}},
      {"mf.r1", {json(0.01), "task-1 readout norm", 1e-300, 1e6}},
      {"mf.theta1", {json(0.0), "task-1 readout angle", 0.0, std::numbers::pi / 4}},
      {"mf.r2", {json(0.1), "task-2 readout norm", 1e-300, 1e6}},
      {"mf.theta2", {json(0.0), "task-2 readout angle", 0.0, std::numbers::pi / 4}},
      {"mf.tau1", {json(60.0), "task-1 span (steps/d)", 0.0, 1e9}},
      {"mf.tau2", {json(60.0), "task-2 span (steps/d)", 0.0, 1e9}},
      {"mf.backend", {json("sgd"), "sgd | ode", 0, 0, {"sgd", "ode"}}},
      {"mf.activation", {json("erf"), "erf | relu", 0, 0, {"erf", "relu"}}},
      {"mf.record_dtau", {json(0.5), "recording cadence in tau", 1e-6, 1e9}},
      {"mf.ode_dtau", {json(0.01), "ODE Euler step", 1e-9, 1.0}},
      {"mf.eval_samples", {json(4096.0), "Monte-Carlo eval samples (relu)", 1, 1e9}},
      {"mf.force_identical", {json(false), "copy teacher 1 into teacher 2"}},
      {"mf.ode_sample_init", {json(true), "ODE initial overlaps from sampled weights"}},
  };
}

Schema ewc_schema() {
  return {
      {"ewc.xi", {json(0.0), "EWC strength (0 = off)", 0.0, 1e12}},
      {"ewc.fisher_samples", {json(1000.0), "samples for the Fisher estimate", 1, 1e9}},
      {"ewc.model_fisher", {json(false), "use the residual-free model Fisher"}},
      {"ewc.normalise", {json(true), "rescale Fisher so max entry = 1"}},
  };
}

ContinualProtocol protocol_from(const Config& cfg, std::uint64_t seed) {
  ContinualProtocol pr;
  pr.p = static_cast<int>(cfg.integer("mf.p"));
  pr.p_star = static_cast<int>(cfg.integer("mf.p_star"));
  pr.d = static_cast<int>(cfg.integer("mf.d"));
  pr.gamma = cfg.num("mf.gamma");
  pr.sigma_w = cfg.num("mf.sigma_w");
  pr.eta = cfg.num("mf.eta");
  pr.init1 = {cfg.num("mf.r1"), cfg.num("mf.theta1")};
  pr.init2 = {cfg.num("mf.r2"), cfg.num("mf.theta2")};
  pr.tau1 = cfg.num("mf.tau1");
  pr.tau2 = cfg.num("mf.tau2");
  pr.backend = cfg.str("mf.backend") == "ode" ? Backend::MeanfieldOde : Backend::Sgd;
  pr.activation = cfg.str("mf.activation") == "relu" ? Activation::Relu : Activation::ScaledErf;
  pr.record_dtau = cfg.num("mf.record_dtau");
  pr.ode_dtau = cfg.num("mf.ode_dtau");
  pr.eval_samples = static_cast<int>(cfg.integer("mf.eval_samples"));
  pr.force_identical_teachers = cfg.flag("mf.force_identical");
  pr.ode_sample_init = cfg.flag("mf.ode_sample_init");
  pr.seed = seed;
  if (cfg.has("ewc.xi") && cfg.num("ewc.xi") > 0.0) {
    EWCOptions ewc;
    ewc.xi = cfg.num("ewc.xi");
    ewc.fisher_samples = static_cast<int>(cfg.integer("ewc.fisher_samples"));
    ewc.model_fisher = cfg.flag("ewc.model_fisher");
    ewc.normalise = cfg.flag("ewc.normalise");
    pr.ewc = ewc;
  }
  return pr;
}

std::vector<double> linspace(double lo, double hi, long n) {
  std::vector<double> v;
  if (n <= 1) {
    v.push_back(lo);
    return v;
  }
  v.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

json two_task_summary(const TwoTaskResult& res) {
  json j;
  j["eps1_end_task1"] = res.eps1_end_task1;
  j["eps1_final"] = res.eps1_final;
  j["eps2_final"] = res.eps2_final;
  j["forgetting"] = forgetting(res);
  j["entropy_task1"] = {{"H_h", res.entropy_task1.h_h},
                        {"H_Q", res.entropy_task1.h_q},
                        {"H_m", res.entropy_task1.h_m}};
  j["entropy_task2"] = {{"H_h", res.entropy_task2.h_h},
                        {"H_Q", res.entropy_task2.h_q},
                        {"H_m", res.entropy_task2.h_m}};
  std::vector<double> norms(res.node_norms_final.data(),
                            res.node_norms_final.data() + res.node_norms_final.size());
  j["node_norms_final"] = norms;
  return j;
}

int cmd_lin_traj(const Config& cfg, RunContext& ctx) {
  const DataStatistics stats(cfg.num("linear.s"), cfg.num("linear.d"));
  const double eta = cfg.num("linear.eta");
  const PathwayConfig pw =
      PathwayConfig::from_init(cfg.num("linear.a0"), cfg.num("linear.lambda"), eta);
  const PathwayDynamics dyn(stats, pw.a0, pw.lambda, eta);

  const double fixed_point = stats.s / stats.d;
  Thresholds thr;
  thr.upsilon_escape = cfg.num("linear.upsilon_escape") > 0 ? cfg.num("linear.upsilon_escape")
                                                            : 0.05 * fixed_point;
  thr.upsilon_hit =
      cfg.num("linear.upsilon_hit") > 0 ? cfg.num("linear.upsilon_hit") : 0.01 * fixed_point;

  const double t_escape = dyn.escaping_time(thr.upsilon_escape);
  const double t_hit = dyn.hitting_time(thr.upsilon_hit);
  double t_max = cfg.num("linear.t_max");
  if (t_max <= 0) t_max = std::isfinite(t_hit) ? 1.2 * t_hit : 1e6;

  const long points = cfg.integer("linear.points");
  Trajectory tr;
  for (long i = 0; i < points; ++i) {
    const double t = t_max * i / std::max(points - 1, 1L);
    const double om = dyn.omega(t);
    tr.times.push_back(t);
    tr.omega.push_back(om);
    tr.loss.push_back(0.5 * (stats.s - om * stats.d) * (stats.s - om * stats.d) / stats.d);
  }
  {
    auto out = ctx.open_output("trajectory.csv");
    write_trajectory_csv(out, tr);
  }
  if (!dyn.logistic_branch())
    ctx.write_json("constants.json", constants_json(stats, pw, dyn.constants()));
  ctx.extras["derived"] = {{"omega0", dyn.omega0()},
                           {"escaping_time", t_escape},
                           {"hitting_time", t_hit},
                           {"upsilon_escape", thr.upsilon_escape},
                           {"upsilon_hit", thr.upsilon_hit},
                           {"logistic_branch", dyn.logistic_branch()}};
  std::cout << "t_escape=" << t_escape << "  t_hit=" << t_hit << "\n";
  return 0;
}

int cmd_race_phase(const Config& cfg, RunContext& ctx) {
  RaceConfig rc;
  rc.s = cfg.num("race.s");
  rc.a0 = cfg.num("race.a0");
  rc.eta = cfg.num("race.eta");
  rc.thresholds = {cfg.num("race.upsilon_escape"), cfg.num("race.upsilon_hit")};
  rc.lambda1_grid = linspace(cfg.num("race.lambda1_min"), cfg.num("race.lambda1_max"),
                             cfg.integer("race.lambda1_count"));
  rc.lambda2_grid = linspace(cfg.num("race.lambda2_min"), cfg.num("race.lambda2_max"),
                             cfg.integer("race.lambda2_count"));
  rc.substeps = static_cast<int>(cfg.integer("race.substeps"));

  const PhaseGrid grid = build_phase_grid(rc, ctx.jobs);
  {
    auto out = ctx.open_output("phase.csv");
    write_phase_csv(out, grid);
  }
  ctx.write_json("phase.json", phase_grid_json(grid));
  long specialised = 0, valid = 0;
  for (std::size_t i = 0; i < grid.min_escape_gap.size(); ++i)
    if (grid.valid[i]) {
      ++valid;
      if (grid.min_escape_gap[i] > 1.0) ++specialised;
    }
  ctx.extras["cells_valid"] = valid;
  ctx.extras["cells_specialised"] = specialised;
  std::cout << "valid cells: " << valid << ", specialised (gap > 1): " << specialised << "\n";
  return 0;
}

int run_meanfield_like(const Config& cfg, RunContext& ctx) {
  const ContinualProtocol pr = protocol_from(cfg, ctx.seed);
  const TwoTaskResult res = run_two_task(pr);
  {
    auto out = ctx.open_output("timeseries.csv");
    write_meanfield_csv(out, res.tau, res.eps1, res.eps2);
  }
  ctx.write_json("summary.json", two_task_summary(res));
  std::cout << "eps1_final=" << res.eps1_final << "  eps2_final=" << res.eps2_final
            << "  forgetting=" << forgetting(res) << "\n";
  return 0;
}

int cmd_continual_sweep(const Config& cfg, RunContext& ctx) {
  const ContinualProtocol tmpl = protocol_from(cfg, ctx.seed);
  AxisSpec ax1{cfg.str("sweep.axis1"),
               linspace(cfg.num("sweep.axis1_min"), cfg.num("sweep.axis1_max"),
                        cfg.integer("sweep.axis1_count"))};
  AxisSpec ax2{cfg.str("sweep.axis2"),
               linspace(cfg.num("sweep.axis2_min"), cfg.num("sweep.axis2_max"),
                        cfg.integer("sweep.axis2_count"))};
  SweepOptions opts;
  opts.n_seeds = static_cast<int>(cfg.integer("sweep.seeds"));
  opts.seed = ctx.seed;
  opts.jobs = ctx.jobs;
  opts.one_task = cfg.flag("sweep.one_task");
  opts.entropy_after_task2 = cfg.str("sweep.entropy_at") == "task2";

  const SweepGrid grid = sweep(tmpl, ax1, ax2, opts);
  {
    auto out = ctx.open_output("grid.csv");
    write_sweep_csv(out, grid);
  }
  ctx.write_json("grid.json", sweep_grid_json(grid));
  json seeds = json::array();
  for (const auto& c : grid.cells) seeds.push_back(c.seed);
  ctx.extras["cell_seeds"] = seeds;
  std::cout << "cells: " << grid.cells.size() << "\n";
  return 0;
}

int cmd_entropy_phase(const Config& cfg, RunContext& ctx) {
  ContinualProtocol tmpl = protocol_from(cfg, ctx.seed);
  tmpl.init1.theta = cfg.num("phase.theta");
  AxisSpec ax1{"log_sigma_w",
               linspace(cfg.num("phase.log_sigma_min"), cfg.num("phase.log_sigma_max"),
                        cfg.integer("phase.n_sigma"))};
  AxisSpec ax2{"r1",
               linspace(cfg.num("phase.r_min"), cfg.num("phase.r_max"), cfg.integer("phase.n_r"))};
  SweepOptions opts;
  opts.n_seeds = static_cast<int>(cfg.integer("sweep.seeds"));
  opts.seed = ctx.seed;
  opts.jobs = ctx.jobs;
  opts.one_task = true;

  const SweepGrid grid = sweep(tmpl, ax1, ax2, opts);
  {
    auto out = ctx.open_output("grid.csv");
    write_sweep_csv(out, grid);
  }
  ctx.write_json("grid.json", sweep_grid_json(grid));
  double hm = 0;
  long n = 0;
  for (const auto& c : grid.cells)
    if (c.valid) {
      hm += c.h_m;
      ++n;
    }
  ctx.extras["mean_H_m"] = n ? hm / n : 0.0;
  std::cout << "mean H_m over " << n << " cells: " << (n ? hm / n : 0.0) << "\n";
  return 0;
}

int cmd_validate(const Config& cfg, RunContext& ctx) {
  bool all_pass = true;
  json report;

  const auto checks = validate_gaussian_averages(static_cast<int>(cfg.integer("val.covariances")),
                                                 cfg.integer("val.mc_samples"), ctx.seed,
                                                 ctx.jobs);
  json mc = json::array();
  int mc_fail = 0;
  for (const auto& c : checks) {
    std::vector<double> sig(c.sigma.data(), c.sigma.data() + c.sigma.size());
    mc.push_back({{"integral", c.integral},
                  {"sigma", sig},
                  {"analytic", c.analytic},
                  {"mc_mean", c.mc_mean},
                  {"mc_stderr", c.mc_stderr},
                  {"deviation_se", c.deviation_se},
                  {"pass", c.pass}});
    if (!c.pass) ++mc_fail;
  }
  report["gaussian_averages"] = mc;
  std::cout << "[" << (mc_fail == 0 ? "PASS" : "FAIL")
            << "] gaussian averages vs Monte Carlo: " << (checks.size() - mc_fail) << "/"
            << checks.size() << " within 3 SE\n";
  all_pass &= (mc_fail == 0);

  // closed form vs GD oracle across a random grid
  const int cells = static_cast<int>(cfg.integer("val.oracle_cells"));
  std::vector<double> devs(cells, 0.0);
  std::vector<double> rt(cells, 0.0);
  Philox sampler(derive_seed(ctx.seed, 0x09acull));
  std::vector<std::array<double, 3>> params;
  while (static_cast<int>(params.size()) < cells) {
    const double s = 0.5 + 104.5 * sampler.next_double();
    const double lam = 0.1 + 99.9 * sampler.next_double();
    const double a0 = 1e-3 + (0.1 - 1e-3) * sampler.next_double();
    if (a0 * std::sqrt(lam + a0 * a0) >= 0.25 * s) continue;
    params.push_back({s, lam, a0});
  }
  parallel_for(cells, ctx.jobs, [&](long i) {
    const auto [s, lam, a0] = params[i];
    const double eta = 1e-5;
    const DataStatistics stats(s, 1.0);
    const PathwayConfig pw = PathwayConfig::from_init(a0, lam, eta);
    const DerivedConstants consts = derive_constants(stats, pw);
    const PathwayDynamics dyn(stats, a0, lam, eta);
    const double tstar = dyn.hitting_time(0.01 * s);
    const long steps = static_cast<long>(std::min(tstar * 1.05, 3e5));
    GdOptions opts;
    opts.record_every = std::max(1L, steps / 64);
    const Trajectory tr = simulate_pathway_gd(stats, {a0}, pw.b0(), eta, steps, opts);
    double dev = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      dev = std::max(dev, std::abs(omega_of_t(stats, pw, consts, tr.times[k]) - tr.omega[k]) /
                              (s / stats.d));
    devs[i] = dev;
    Thresholds thr{0.5 * s, 0.01 * s};
    const double that = escaping_time(stats, pw, consts, thr);
    const double thit = hitting_time(stats, pw, consts, thr);
    rt[i] = std::max(std::abs(omega_of_t(stats, pw, consts, that) - thr.upsilon_escape) /
                         std::max(1.0, thr.upsilon_escape),
                     std::abs(s / stats.d - omega_of_t(stats, pw, consts, thit) -
                              thr.upsilon_hit) /
                         std::max(1.0, thr.upsilon_hit));
  });
  const double max_dev = *std::max_element(devs.begin(), devs.end());
  const double max_rt = *std::max_element(rt.begin(), rt.end());
  const bool oracle_pass = max_dev < 1e-3;
  const bool rt_pass = max_rt < 1e-8;
  report["gd_oracle"] = {{"cells", cells},
                         {"max_scale_relative_deviation", max_dev},
                         {"pass", oracle_pass}};
  report["round_trip"] = {{"max_relative_error", max_rt}, {"pass", rt_pass}};
  std::cout << "[" << (oracle_pass ? "PASS" : "FAIL")
            << "] closed form vs GD oracle: max deviation " << max_dev << " (tol 1e-3)\n";
  std::cout << "[" << (rt_pass ? "PASS" : "FAIL") << "] escape/hit round trip: max error "
            << max_rt << " (tol 1e-8)\n";
  all_pass &= oracle_pass && rt_pass;

  report["pass"] = all_pass;
  ctx.write_json("validation.json", report);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specdyn: initialisation-driven specialisation dynamics toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  long seed = 0;
  int jobs = 0;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"lin-traj", "closed-form single-pathway trajectory and timing constants"},
      {"race-phase", "two-pathway specialisation phase diagram"},
      {"meanfield-run", "two-layer teacher-student run (SGD or mean-field ODE)"},
      {"continual-sweep", "two-task sweeps over protocol axes"},
      {"entropy-phase", "single-task entropy phase diagram over (log sigma_w, r)"},
      {"ewc-run", "two-task run with EWC regularisation"},
      {"validate", "Monte-Carlo and GD-oracle validation suites"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config (or a previous manifest.json)");
    sub->add_option("--set", overrides, "override as key=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "global seed")->configurable(false);
    sub->add_option("--jobs", jobs, "parallel workers (default: SPECDYN_JOBS or cores)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  Schema schema;
  if (command == "lin-traj") {
    schema = {
        {"linear.s", {json(1.0), "input-output singular value", 0.0, 1e12}},
        {"linear.d", {json(1.0), "input singular value", 1e-12, 1e12}},
        {"linear.lambda", {json(2.0), "imbalance", -1e12, 1e12}},
        {"linear.a0", {json(0.01), "initial first-layer scale", 1e-300, 1e12}},
        {"linear.eta", {json(1e-5), "learning rate", 1e-300, 1.0}},
        {"linear.t_max", {json(0.0), "trajectory horizon (0 = auto)", 0.0, 1e15}},
        {"linear.points", {json(201.0), "trajectory samples", 2, 1e7}},
        {"linear.upsilon_escape", {json(0.0), "escape threshold (0 = 0.05 s/d)", 0.0, 1e12}},
        {"linear.upsilon_hit", {json(0.0), "hit threshold (0 = 0.01 s/d)", 0.0, 1e12}},
    };
  } else if (command == "race-phase") {
    schema = {
        {"race.s", {json(105.0), "task singular value", 1e-12, 1e12}},
        {"race.a0", {json(0.01), "shared first-layer scale", 1e-300, 1e12}},
        {"race.eta", {json(1e-5), "learning rate", 1e-300, 1.0}},
        {"race.upsilon_escape", {json(5.0), "escape threshold", 1e-300, 1e12}},
        {"race.upsilon_hit", {json(1.0), "hit threshold", 1e-300, 1e12}},
        {"race.lambda1_min", {json(0.0), "fast imbalance grid start", 0.0, 1e12}},
        {"race.lambda1_max", {json(100.0), "fast imbalance grid end", 0.0, 1e12}},
        {"race.lambda1_count", {json(21.0), "fast grid size", 1, 100000}},
        {"race.lambda2_min", {json(0.0), "slow imbalance grid start", 0.0, 1e12}},
        {"race.lambda2_max", {json(20.0), "slow imbalance grid end", 0.0, 1e12}},
        {"race.lambda2_count", {json(21.0), "slow grid size", 1, 100000}},
        {"race.substeps", {json(1.0), "slow-integrator substeps per epoch", 1, 1000}},
    };
  } else if (command == "meanfield-run" || command == "ewc-run") {
    schema = meanfield_schema();
    if (command == "ewc-run") {
      Schema e = ewc_schema();
      schema.insert(e.begin(), e.end());
      schema["ewc.xi"].def = json(0.01);
    }
  } else if (command == "continual-sweep") {
    schema = meanfield_schema();
    Schema e = ewc_schema();
    schema.insert(e.begin(), e.end());
    const std::vector<std::string> axes = {"gamma",  "sigma_w", "log_sigma_w", "r1", "theta1",
                                           "r2",     "theta2",  "xi",          "none"};
    schema.insert({
        {"sweep.axis1", {json("gamma"), "first axis", 0, 0, axes}},
        {"sweep.axis1_min", {json(0.0), "axis 1 start", -1e12, 1e12}},
        {"sweep.axis1_max", {json(1.0), "axis 1 end", -1e12, 1e12}},
        {"sweep.axis1_count", {json(11.0), "axis 1 size", 1, 100000}},
        {"sweep.axis2", {json("none"), "second axis", 0, 0, axes}},
        {"sweep.axis2_min", {json(0.0), "axis 2 start", -1e12, 1e12}},
        {"sweep.axis2_max", {json(0.0), "axis 2 end", -1e12, 1e12}},
        {"sweep.axis2_count", {json(1.0), "axis 2 size", 1, 100000}},
        {"sweep.seeds", {json(1.0), "replicas per cell", 1, 10000}},
        {"sweep.one_task", {json(false), "train task 1 only"}},
        {"sweep.entropy_at", {json("task1"), "entropy snapshot", 0, 0, {"task1", "task2"}}},
    });
  } else if (command == "entropy-phase") {
    schema = meanfield_schema();
    schema.insert({
        {"phase.theta", {json(0.0), "task-1 readout angle", 0.0, std::numbers::pi / 4}},
        {"phase.log_sigma_min", {json(-3.0), "log10 sigma_w start", -12.0, 12.0}},
        {"phase.log_sigma_max", {json(0.0), "log10 sigma_w end", -12.0, 12.0}},
        {"phase.n_sigma", {json(8.0), "sigma grid size", 1, 10000}},
        {"phase.r_min", {json(0.1), "readout norm start", 1e-300, 1e12}},
        {"phase.r_max", {json(1.0), "readout norm end", 1e-300, 1e12}},
        {"phase.n_r", {json(8.0), "r grid size", 1, 10000}},
        {"sweep.seeds", {json(1.0), "replicas per cell", 1, 10000}},
    });
  } else if (command == "validate") {
    schema = {
        {"val.mc_samples", {json(1e7), "Monte-Carlo samples per cell", 1000, 1e10}},
        {"val.covariances", {json(50.0), "covariances per integral", 1, 10000}},
        {"val.oracle_cells", {json(20.0), "GD-oracle grid cells", 1, 10000}},
    };
  }

  try {
    Config cfg(schema, command);
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) cfg.set_kv(kv);

    const bool seed_given =
        app.get_subcommands().front()->count("--seed") > 0;
    RunContext ctx;
    ctx.command = command;
    ctx.seed = !seed_given && cfg.manifest_seed ? *cfg.manifest_seed
                                                : static_cast<std::uint64_t>(seed);
    ctx.jobs = default_jobs(jobs);
    ctx.out_dir = out_dir.empty() ? fs::path(command + "_out") : fs::path(out_dir);
    fs::create_directories(ctx.out_dir);

    int rc = 0;
    if (command == "lin-traj")
      rc = cmd_lin_traj(cfg, ctx);
    else if (command == "race-phase")
      rc = cmd_race_phase(cfg, ctx);
    else if (command == "meanfield-run" || command == "ewc-run")
      rc = run_meanfield_like(cfg, ctx);
    else if (command == "continual-sweep")
      rc = cmd_continual_sweep(cfg, ctx);
    else if (command == "entropy-phase")
      rc = cmd_entropy_phase(cfg, ctx);
    else if (command == "validate")
      rc = cmd_validate(cfg, ctx);

    ctx.finalize(cfg);
    return rc;
  } catch (const std::exception& e) {
    json err = {{"command", command}, {"error", e.what()}};
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / "error.json", std::ios::binary);
      out << err.dump(2) << '\n';
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
