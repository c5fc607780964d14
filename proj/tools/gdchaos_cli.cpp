// gdchaos command-line front end.
//
// Exit codes: 0 all criteria pass, 1 a criterion failed, 2 usage or config
// error, 3 numerical divergence.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdchaos/gdchaos.hpp"

namespace {

using namespace gdchaos;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr const char* kOutEnv = "GDCHAOS_OUT";
constexpr const char* kDefaultOut = "gdchaos-out";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory (default: $" + std::string(kOutEnv) + " or " + kDefaultOut + ")");
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--workers", c.workers, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag("-q,--quiet", c.quiet, "Suppress progress messages on stderr");
}

std::filesystem::path resolve_out(const std::string& flag, const std::optional<std::string>& from_config) {
  if (!flag.empty()) return flag;
  if (from_config) return *from_config;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return kDefaultOut;
}

std::ostream* log_stream(const Common& c) { return c.quiet ? nullptr : &std::cerr; }

int exit_code_of(const Verdict& v) {
  if (v.diverged) return kExitDiverged;
  return v.passed() ? kExitPass : kExitFail;
}

void print_verdict(const Verdict& v, const std::filesystem::path& dir) {
  std::cout << v.experiment << ": " << (v.passed() ? "PASS" : (v.diverged ? "DIVERGED" : "FAIL")) << "  ("
            << (dir / "verdict.json").string() << ")\n";
  for (const auto& c : v.criteria) {
    std::cout << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.id << "  " << c.metric << " = "
              << v.metric(c.metric) << "  [" << to_string(c.op) << ' ' << c.lo;
    if (c.op == CompareOp::within) std::cout << ", " << c.hi;
    std::cout << "]\n";
  }
  for (const auto& f : v.flags) std::cout << "  flag: " << f << '\n';
  if (!v.error.empty()) std::cout << "  error: " << v.error << '\n';
}

// ---------------------------------------------------------------- experiment subcommands

struct ExperimentArgs {
  std::string experiment;
  Common common;
  std::string config;
  std::string preset = "full";
  std::vector<std::string> sets;
  // Flags that shadow config keys; empty means "not given".
  std::string eta, epsilon, macro, micro;
};

struct LoadedConfig {
  ExperimentConfig cfg;
  std::optional<std::string> out_from_config;
};

LoadedConfig load_experiment_config(const std::string& experiment, const std::string& path, Preset preset) {
  if (path.empty()) return {default_config(experiment, preset), std::nullopt};
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::istringstream a(buf.str()), b(buf.str());
  LoadedConfig lc{parse_config(a, preset, experiment), std::nullopt};
  for (const auto& e : parse_config_entries(b))
    if (e.key == "out") lc.out_from_config = lc.cfg.text("out");
  return lc;
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                    const std::string& source, std::ostream* log) {
  const std::string old = cfg.set(key, value);
  if (log && old != cfg.text(key))
    *log << "[" << cfg.experiment() << "] " << source << " overrides " << key << ": " << old << " -> "
         << cfg.text(key) << '\n';
}

void apply_sets(ExperimentConfig& cfg, const std::vector<std::string>& sets, std::ostream* log) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    apply_override(cfg, detail::trim(s.substr(0, eq)), s.substr(eq + 1), "--set", log);
  }
}

int run_experiment_command(ExperimentArgs& a, CLI::App* sub) {
  std::ostream* log = log_stream(a.common);
  LoadedConfig lc = load_experiment_config(a.experiment, a.config, parse_preset(a.preset));
  ExperimentConfig& cfg = lc.cfg;
  apply_sets(cfg, a.sets, log);
  const std::vector<std::pair<std::string, std::string*>> flags = {
      {"eta", &a.eta}, {"epsilon", &a.epsilon}, {"macro", &a.macro}, {"micro", &a.micro}};
  for (const auto& [key, value] : flags)
    if (!value->empty()) apply_override(cfg, key, *value, "--" + key, log);
  if (sub->count("--seed")) apply_override(cfg, "seed", std::to_string(a.common.seed), "--seed", log);
  if (sub->count("--workers")) cfg.set("workers", std::to_string(a.common.workers));
  const std::filesystem::path out = resolve_out(a.common.out, lc.out_from_config);
  cfg.set("out", out.string());

  const RunContext ctx{out, log};
  ctx.write("config.txt", cfg.serialize());
  const Verdict v = run_experiment(cfg, ctx);
  write_verdict(v, ctx);
  print_verdict(v, out);
  return exit_code_of(v);
}

std::string config_keys_footer(const std::string& experiment, const std::string& title) {
  std::ostringstream os;
  os << title << " (" << experiment << ", full defaults):\n";
  const ExperimentConfig defaults = default_config(experiment);
  for (const auto& p : defaults.schema()) {
    if (p.key == "seed" || p.key == "workers" || p.key == "out") continue;
    os << "  " << p.key << " = " << p.full;
    if (!p.doc.empty()) os << "  # " << p.doc;
    os << '\n';
  }
  return os.str();
}

CLI::App* add_experiment_command(CLI::App& app, const std::string& name, const std::string& experiment,
                                 const std::string& description, ExperimentArgs& a) {
  a.experiment = experiment;
  CLI::App* sub = app.add_subcommand(name, description);
  const ExperimentConfig defaults = default_config(experiment);
  sub->add_option("--config", a.config, "Config file (key = value, schema_version = 1)");
  sub->add_option("--preset", a.preset, "Default sizes: full or quick")
      ->check(CLI::IsMember({"full", "quick"}))
      ->capture_default_str();
  sub->add_option("--set", a.sets, "Override a config key (key=value); repeatable");
  if (defaults.has("eta")) sub->add_option("--eta", a.eta, "Learning rate");
  if (defaults.has("epsilon")) sub->add_option("--epsilon", a.epsilon, "Micro-scale epsilon");
  if (defaults.has("macro")) sub->add_option("--macro", a.macro, "Macro catalog id, e.g. double-well:k=5");
  if (defaults.has("micro")) sub->add_option("--micro", a.micro, "Micro catalog id");
  add_common(sub, a.common);
  sub->footer(config_keys_footer(experiment, "Config keys"));
  return sub;
}

// ---------------------------------------------------------------- operation subcommands

struct ObjectiveArgs {
  std::string macro = "quartic";
  std::string micro = "sin";
  double epsilon = 1e-6;
  double eta = 0.1;
};

void add_objective(CLI::App* sub, ObjectiveArgs& o) {
  sub->add_option("--macro", o.macro, "Macro catalog id: quadratic, quartic, matyas, double-well:k=<k>")
      ->capture_default_str();
  sub->add_option("--micro", o.micro, "Micro catalog id: sin, cos-neg, quasi, sincos2d, modulated, none")
      ->capture_default_str();
  sub->add_option("--epsilon", o.epsilon, "Micro-scale epsilon")->capture_default_str();
  sub->add_option("--eta", o.eta, "Learning rate")->capture_default_str();
}

MultiscaleObjective make_objective(const ObjectiveArgs& o) {
  if (o.micro == "none") return MultiscaleObjective(catalog_macro(o.macro));
  return MultiscaleObjective(catalog_macro(o.macro), catalog_micro(o.micro, o.epsilon));
}

struct MapArgs {
  std::string kind = "gd";
  double gamma = 0.9;
  double mu = 1.0;
};

void add_map(CLI::App* sub, MapArgs& m) {
  sub->add_option("--map", m.kind, "Map kind: gd, stochastic-gd, heavy-ball, nag-sc")->capture_default_str();
  sub->add_option("--gamma", m.gamma, "Heavy-ball momentum")->capture_default_str();
  sub->add_option("--mu", m.mu, "NAG-SC strong-convexity hint")->capture_default_str();
}

MapSpec make_map(const ObjectiveArgs& o, const MapArgs& m) {
  const MultiscaleObjective obj = make_objective(o);
  switch (parse_map_kind(m.kind)) {
    case MapKind::gd:
      return MapSpec::gd(obj, o.eta);
    case MapKind::stochastic_gd:
      return MapSpec::stochastic_from(obj, o.eta);
    case MapKind::heavy_ball:
      return MapSpec::heavy_ball(obj, o.eta, m.gamma);
    case MapKind::nag_sc:
      return MapSpec::nag_sc(obj, o.eta, m.mu);
  }
  throw UsageError("unknown map kind");
}

Vec vec_of(const std::vector<double>& v, std::size_t dim, const std::string& what) {
  if (v.size() != dim)
    throw UsageError(what + " needs " + std::to_string(dim) + " component(s), got " + std::to_string(v.size()));
  Vec x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = v[i];
  return x;
}

std::string table_text(const io::StateTable& t, const std::string& format, std::uint64_t first = 0,
                       std::uint64_t stride = 1) {
  std::ostringstream os;
  if (format == "binary")
    io::write_binary(os, t);
  else
    io::write_csv(os, t, first, stride);
  return os.str();
}

struct OrbitArgs {
  Common common;
  ObjectiveArgs obj;
  MapArgs map;
  std::vector<double> x0 = {0.5};
  std::uint64_t steps = 10000;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::string format = "csv";
};

int run_orbit(const OrbitArgs& a) {
  const MapSpec map = make_map(a.obj, a.map);
  const RunContext ctx{resolve_out(a.common.out, std::nullopt), log_stream(a.common)};
  const Orbit o = iterate(map, map.initial_state(vec_of(a.x0, map.dimension(), "--x0")), a.steps, a.burn_in,
                          a.thin, a.common.seed);
  const std::string name = a.format == "binary" ? "orbit.bin" : "orbit.csv";
  ctx.write(name, table_text(io::table_of(o), a.format, o.burn_in, o.thin));
  std::cout << (ctx.out_dir / name).string() << ": " << o.size() << " states\n";
  return kExitPass;
}

struct EnsembleArgs {
  Common common;
  ObjectiveArgs obj;
  MapArgs map;
  std::uint64_t members = 10000;
  std::uint64_t steps = 1000;
  double lo = -2.0;
  double hi = 2.0;
  std::size_t bins = 100;
  std::string format = "csv";
};

int run_ensemble(const EnsembleArgs& a) {
  const MapSpec map = make_map(a.obj, a.map);
  const RunContext ctx{resolve_out(a.common.out, std::nullopt), log_stream(a.common)};
  const auto init = uniform_box(a.members, map.dimension(), a.lo, a.hi, derive_seed(a.common.seed, 1));
  const Ensemble e = evolve_ensemble(map, Ensemble::from_points(map, init), a.steps,
                                     derive_seed(a.common.seed, 2), a.common.workers);
  const std::string name = a.format == "binary" ? "ensemble.bin" : "ensemble.csv";
  ctx.write(name, table_text(io::table_of(e), a.format));
  if (e.dim == 1) {
    const auto xs = e.coordinate(0);
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    const Range r{*lo, *hi > *lo ? *hi : *lo + 1.0};
    std::ostringstream os;
    make_histogram(xs, a.bins, r).write_csv(os);
    ctx.write("ensemble_hist.csv", os.str());
  }
  std::cout << (ctx.out_dir / name).string() << ": " << e.size() << " members after " << a.steps << " steps\n";
  return kExitPass;
}

struct LyapunovArgs {
  Common common;
  ObjectiveArgs obj;
  std::vector<double> x0;
  std::uint64_t steps = 10000000;
  std::uint64_t burn_in = 1000;
  double tol = 0.1;
  bool sweep = false;
  ExperimentArgs experiment;
};

int run_lyapunov(LyapunovArgs& a, CLI::App* sub) {
  if (a.sweep) {
    a.experiment.common = a.common;
    a.experiment.epsilon = sub->count("--epsilon") ? detail::format_real(a.obj.epsilon) : "";
    a.experiment.macro = sub->count("--macro") ? a.obj.macro : "";
    if (sub->count("--eta") || sub->count("--micro") || sub->count("--x0") || sub->count("--steps"))
      throw UsageError("--sweep takes its learning rates, micro-scales and sizes from the config");
    return run_experiment_command(a.experiment, sub);
  }
  if (sub->count("--config") || !a.experiment.sets.empty())
    throw UsageError("--config and --set apply to --sweep only");
  const MultiscaleObjective obj = make_objective(a.obj);
  if (!obj.micro()) throw UsageError("lyapunov needs a micro-scale");
  std::vector<double> start = a.x0;
  if (start.empty()) start.assign(obj.dimension(), 0.5);
  const Vec x0 = vec_of(start, obj.dimension(), "--x0");
  std::optional<double> m;
  if (obj.micro()->m_oracle()) m = m_constant(*obj.micro());
  const LyapunovEstimate e = lyapunov(obj, a.obj.eta, x0, a.steps, a.burn_in, m);
  Json j;
  j["macro"] = obj.macro().id();
  j["micro"] = obj.micro()->id();
  j["eta"] = e.eta;
  j["epsilon"] = e.epsilon;
  j["steps"] = e.n;
  j["burn_in"] = e.burn_in;
  j["x0"] = start;
  j["lambda"] = e.lambda;
  j["ln_eta_over_eps"] = std::log(e.eta / e.epsilon);
  j["residual"] = e.residual;
  if (m) {
    j["m"] = *m;
    j["deviation"] = std::fabs(e.residual - *m);
    j["tolerance"] = a.tol;
    j["pass"] = std::fabs(e.residual - *m) <= a.tol;
  }
  const RunContext ctx{resolve_out(a.common.out, std::nullopt), log_stream(a.common)};
  ctx.write("lyapunov.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return (!m || std::fabs(e.residual - *m) <= a.tol) ? kExitPass : kExitFail;
}

struct GibbsArgs {
  Common common;
  std::string macro = "quartic";
  std::string micro = "sin";
  double eta = 0.1;
  double sigma2 = 0;
  std::uint64_t samples = 0;
  std::size_t rows = 4096;
};

int run_gibbs(const GibbsArgs& a) {
  const MacroFunction f0 = catalog_macro(a.macro);
  double s2 = a.sigma2;
  if (!(s2 > 0.0)) {
    const MicroScale micro = catalog_micro(a.micro, 1.0);
    if (!micro.noise()) throw UsageError("micro '" + a.micro + "' has no noise model; pass --sigma2");
    s2 = micro.noise()->sigma2();
  }
  const GibbsDensity g(f0, a.eta, s2);
  const RunContext ctx{resolve_out(a.common.out, std::nullopt), log_stream(a.common)};
  {
    std::ostringstream os;
    const std::size_t per_axis = g.dimension() == 1 ? a.rows : static_cast<std::size_t>(std::sqrt(double(a.rows)));
    g.write_csv(os, std::max<std::size_t>(1, g.intervals() / std::max<std::size_t>(1, per_axis)));
    ctx.write("gibbs_density.csv", os.str());
  }
  if (a.samples > 0) {
    const auto xs = gibbs_sample(g, a.samples, a.common.seed, a.common.workers);
    ctx.write("gibbs_samples.csv", table_text({g.dimension(), xs}, "csv"));
  }
  Json j;
  j["macro"] = f0.id();
  j["eta"] = a.eta;
  j["sigma2"] = s2;
  j["radius"] = g.radius();
  j["z"] = g.z();
  j["log_z"] = g.log_z();
  j["z_relative_error"] = g.z_relative_error();
  j["tail_bound"] = g.tail_bound();
  ctx.write("gibbs.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return kExitPass;
}

// ---------------------------------------------------------------- suite

struct SuiteArgs {
  Common common;
  std::string preset = "full";
  std::vector<std::string> only;
  std::vector<std::string> configs;
};

int run_suite(const SuiteArgs& a, CLI::App* sub) {
  std::ostream* log = log_stream(a.common);
  const Preset preset = parse_preset(a.preset);
  std::vector<std::string> ids;
  if (a.only.empty()) {
    for (const auto& e : experiment_registry()) ids.push_back(e.id);
  } else {
    for (const auto& id : a.only) ids.push_back(find_experiment(id).id);
  }
  std::vector<ExperimentConfig> cfgs;
  for (const auto& id : ids) cfgs.push_back(default_config(id, preset));
  for (const auto& path : a.configs) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    ExperimentConfig c = parse_config(in, preset);
    bool used = false;
    for (auto& cfg : cfgs)
      if (cfg.experiment() == c.experiment()) {
        cfg = c;
        used = true;
      }
    if (!used) throw UsageError("config '" + path + "' is for " + c.experiment() + ", which is not selected");
  }
  const std::filesystem::path out = resolve_out(a.common.out, std::nullopt);
  int code = kExitPass;
  Json summary = Json::object();
  for (auto& cfg : cfgs) {
    if (sub->count("--seed")) apply_override(cfg, "seed", std::to_string(a.common.seed), "--seed", log);
    if (sub->count("--workers")) cfg.set("workers", std::to_string(a.common.workers));
    const std::filesystem::path dir = out / cfg.experiment();
    cfg.set("out", dir.string());
    const RunContext ctx{dir, log};
    ctx.write("config.txt", cfg.serialize());
    const Verdict v = run_experiment(cfg, ctx);
    write_verdict(v, ctx);
    print_verdict(v, dir);
    summary[cfg.experiment()] = v.passed();
    code = std::max(code, exit_code_of(v));
  }
  RunContext{out, log}.write("suite.json", summary.dump(2) + "\n");
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient descent on multiscale objectives: orbits, invariant laws, Lyapunov exponents and experiments",
               "gdchaos"};
  app.require_subcommand(1);
  app.fallthrough(false);

  OrbitArgs orbit;
  CLI::App* orbit_cmd = app.add_subcommand("orbit", "Iterate one map from one start and write the states");
  add_objective(orbit_cmd, orbit.obj);
  add_map(orbit_cmd, orbit.map);
  orbit_cmd->add_option("--x0", orbit.x0, "Start position (one value per dimension)")->capture_default_str();
  orbit_cmd->add_option("--steps", orbit.steps, "Recorded steps")->capture_default_str();
  orbit_cmd->add_option("--burn-in", orbit.burn_in, "Discarded steps")->capture_default_str();
  orbit_cmd->add_option("--thin", orbit.thin, "Record every n-th state")->check(CLI::PositiveNumber)->capture_default_str();
  orbit_cmd->add_option("--format", orbit.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();
  add_common(orbit_cmd, orbit.common);

  EnsembleArgs ens;
  CLI::App* ens_cmd = app.add_subcommand("ensemble", "Evolve a uniform ensemble and write the final states");
  add_objective(ens_cmd, ens.obj);
  add_map(ens_cmd, ens.map);
  ens_cmd->add_option("--members", ens.members, "Ensemble size")->check(CLI::PositiveNumber)->capture_default_str();
  ens_cmd->add_option("--steps", ens.steps, "Steps per member")->capture_default_str();
  ens_cmd->add_option("--lo", ens.lo, "Initial box lower edge")->capture_default_str();
  ens_cmd->add_option("--hi", ens.hi, "Initial box upper edge")->capture_default_str();
  ens_cmd->add_option("--bins", ens.bins, "Histogram bins (1D only)")->check(CLI::Range(2, 1 << 24))->capture_default_str();
  ens_cmd->add_option("--format", ens.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();
  add_common(ens_cmd, ens.common);

  LyapunovArgs lyap;
  lyap.obj.macro = "double-well:k=1";
  lyap.experiment.experiment = "lyapunov-sweep";
  CLI::App* lyap_cmd = app.add_subcommand(
      "lyapunov", "Estimate the Lyapunov exponent of GD and compare lambda - ln(eta/eps) with m; --sweep runs the full sweep");
  add_objective(lyap_cmd, lyap.obj);
  lyap_cmd->add_option("--x0", lyap.x0, "Start position (default 0.5 per dimension)");
  lyap_cmd->add_option("--steps", lyap.steps, "Averaged steps")->capture_default_str();
  lyap_cmd->add_option("--burn-in", lyap.burn_in, "Discarded steps")->capture_default_str();
  lyap_cmd->add_option("--tol", lyap.tol, "Allowed |lambda - ln(eta/eps) - m|")->capture_default_str();
  lyap_cmd->add_flag("--sweep", lyap.sweep, "Run the lyapunov-sweep experiment instead of one estimate");
  lyap_cmd->add_option("--config", lyap.experiment.config, "Config file for --sweep");
  lyap_cmd->add_option("--preset", lyap.experiment.preset, "Default sizes for --sweep: full or quick")
      ->check(CLI::IsMember({"full", "quick"}))
      ->capture_default_str();
  lyap_cmd->add_option("--set", lyap.experiment.sets, "Override a config key for --sweep (key=value); repeatable");
  add_common(lyap_cmd, lyap.common);
  lyap_cmd->footer(config_keys_footer("lyapunov-sweep", "--sweep config keys"));

  GibbsArgs gibbs;
  CLI::App* gibbs_cmd = app.add_subcommand("gibbs", "Tabulate the rescaled Gibbs density exp(-2 f0 / (eta sigma^2)) / Z");
  gibbs_cmd->add_option("--macro", gibbs.macro, "Macro catalog id")->capture_default_str();
  gibbs_cmd->add_option("--micro", gibbs.micro, "Micro catalog id supplying sigma^2")->capture_default_str();
  gibbs_cmd->add_option("--sigma2", gibbs.sigma2, "Noise variance; overrides --micro");
  gibbs_cmd->add_option("--eta", gibbs.eta, "Learning rate")->capture_default_str();
  gibbs_cmd->add_option("--samples", gibbs.samples, "Also write this many exact samples")->capture_default_str();
  gibbs_cmd->add_option("--rows", gibbs.rows, "Approximate rows (per axis in 2D) of the density table")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(gibbs_cmd, gibbs.common);

  ExperimentArgs residuals, escape, momentum, matyas, bifurcation;
  CLI::App* residuals_cmd = add_experiment_command(
      app, "residuals", "residual-orders",
      "Invariance-residual and gradient-moment slopes, coupling rates, modified-equation growth", residuals);
  CLI::App* escape_cmd = add_experiment_command(app, "escape", "escape-dichotomy",
                                                "Double-well escape dichotomy and local Gaussian law", escape);
  CLI::App* momentum_cmd = add_experiment_command(app, "momentum", "momentum",
                                                  "Stochastic behaviour of heavy ball and NAG-SC", momentum);
  CLI::App* matyas_cmd = add_experiment_command(app, "matyas", "matyas-2d",
                                                "Deterministic vs stochastic map on the Matyas function", matyas);
  CLI::App* bifurcation_cmd = add_experiment_command(app, "bifurcation", "bifurcation",
                                                     "Bifurcation scan of GD as eta crosses the micro scale", bifurcation);

  SuiteArgs suite;
  CLI::App* suite_cmd = app.add_subcommand("suite", "Run every experiment (or a selection) and write one verdict each");
  suite_cmd->add_option("--only", suite.only, "Experiments to run (comma separated)")->delimiter(',');
  suite_cmd->add_option("--preset", suite.preset, "Default sizes: full or quick")
      ->check(CLI::IsMember({"full", "quick"}))
      ->capture_default_str();
  suite_cmd->add_option("--config", suite.configs, "Config file for one experiment; repeatable");
  add_common(suite_cmd, suite.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (orbit_cmd->parsed()) return run_orbit(orbit);
    if (ens_cmd->parsed()) return run_ensemble(ens);
    if (lyap_cmd->parsed()) return run_lyapunov(lyap, lyap_cmd);
    if (gibbs_cmd->parsed()) return run_gibbs(gibbs);
    if (residuals_cmd->parsed()) return run_experiment_command(residuals, residuals_cmd);
    if (escape_cmd->parsed()) return run_experiment_command(escape, escape_cmd);
    if (momentum_cmd->parsed()) return run_experiment_command(momentum, momentum_cmd);
    if (matyas_cmd->parsed()) return run_experiment_command(matyas, matyas_cmd);
    if (bifurcation_cmd->parsed()) return run_experiment_command(bifurcation, bifurcation_cmd);
    if (suite_cmd->parsed()) return run_suite(suite, suite_cmd);
  } catch (const DivergenceError& e) {
    std::cerr << "gdchaos: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "gdchaos: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
