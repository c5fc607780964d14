#pragma once

// Named, config-driven experiments. Each one builds objectives and maps from
// the catalogs, runs them, writes figure data as CSV into the output
// directory and returns a Verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gdchaos/chaos.hpp"
#include "gdchaos/config.hpp"
#include "gdchaos/dynamics.hpp"
#include "gdchaos/io.hpp"
#include "gdchaos/objective.hpp"
#include "gdchaos/stats.hpp"
#include "gdchaos/verdict.hpp"

namespace gdchaos {

struct RunContext {
  std::filesystem::path out_dir = ".";
  /// Progress messages; null silences them.
  std::ostream* log = nullptr;

  void note(const std::string& experiment, const std::string& msg) const {
    if (log) *log << "[" << experiment << "] " << msg << std::endl;
  }
  /// Writes `content` to out_dir / name. Names are plain relative file names.
  void write(const std::string& name, const std::string& content) const {
    const std::filesystem::path p(name);
    if (p.is_absolute() || p.has_parent_path() || name == ".." || name == ".")
      throw std::invalid_argument("output name must be a plain file name: " + name);
    io::write_file(out_dir / p, content);
  }
};

/// Independent 64-bit seed for one part of an experiment.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t tag) {
  const auto o = philox4x32_10({tag, 0x5EEDu, 0u, 0u},
                               {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return (static_cast<std::uint64_t>(o[0]) << 32) | o[1];
}

namespace detail {

inline std::vector<double> slice(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(lo),
                             v.begin() + static_cast<std::ptrdiff_t>(hi));
}

inline std::vector<double> strided(const std::vector<double>& v, std::size_t start, std::size_t step) {
  std::vector<double> out;
  out.reserve(v.size() / step + 1);
  for (std::size_t i = start; i < v.size(); i += step) out.push_back(v[i]);
  return out;
}

/// W1 noise floor of an i.i.d. sample: mean over the even/odd split and the
/// first/second-half split.
inline double half_split_floor(const std::vector<double>& xs) {
  const std::size_t h = xs.size() / 2;
  return 0.5 * (w1_distance_1d(strided(xs, 0, 2), strided(xs, 1, 2)) +
                w1_distance_1d(slice(xs, 0, h), slice(xs, h, xs.size())));
}

inline std::string csv_of(const EmpiricalDistribution& h) {
  std::ostringstream os;
  h.write_csv(os);
  return os.str();
}

inline std::string csv_of(const GibbsDensity& g, std::size_t max_rows) {
  std::ostringstream os;
  g.write_csv(os, std::max<std::size_t>(1, g.intervals() / max_rows));
  return os.str();
}

inline std::string orbit_prefix_csv(const Orbit& o, std::size_t length) {
  io::StateTable t{o.dim, slice(o.x, 0, std::min(o.x.size(), length * o.dim))};
  std::ostringstream os;
  io::write_csv(os, t, o.burn_in, o.thin);
  return os.str();
}

inline Range span_of(const std::vector<double>& a, const std::vector<double>& b) {
  const auto [alo, ahi] = std::minmax_element(a.begin(), a.end());
  const auto [blo, bhi] = std::minmax_element(b.begin(), b.end());
  Range r{std::fmin(*alo, *blo), std::fmax(*ahi, *bhi)};
  if (!(r.hi > r.lo)) r.hi = r.lo + 1.0;
  return r;
}

inline std::vector<Vec> points_1d(const std::vector<Vec>& pts) { return pts; }

/// Ensemble-vs-Gibbs and orbit-vs-ensemble checks shared by the 1D ergodicity
/// experiments. Metrics are written with the given prefix.
inline void ergodicity_checks(Verdict& v, const ExperimentConfig& cfg, const RunContext& ctx,
                              const MultiscaleObjective& obj, double eta, const std::string& prefix,
                              std::uint32_t seed_tag) {
  const std::uint64_t seed = cfg.count("seed");
  const auto workers = static_cast<unsigned>(cfg.count("workers"));
  const std::size_t members = cfg.count("ensemble_size");
  const std::uint64_t steps = cfg.count("ensemble_steps");
  const MapSpec map = MapSpec::gd(obj, eta);

  ctx.note(cfg.experiment(), prefix + "ensemble of " + std::to_string(members) + " members, " +
                                 std::to_string(steps) + " steps on " + obj.id());
  const auto init = uniform_box(members, 1, cfg.real("init_lo"), cfg.real("init_hi"),
                                derive_seed(seed, seed_tag));
  const Ensemble ens = evolve_ensemble(map, Ensemble::from_points(map, init), steps,
                                       derive_seed(seed, seed_tag + 1), workers);
  const std::vector<double> xs = ens.coordinate(0);

  ctx.note(cfg.experiment(), prefix + "orbit of " + std::to_string(cfg.count("orbit_steps")) + " steps");
  const Orbit orbit = iterate(map, map.initial_state(Vec{cfg.real("x0")}), cfg.count("orbit_steps"),
                              cfg.count("burn_in"), 1, derive_seed(seed, seed_tag + 2));
  const std::vector<double> os = orbit.coordinate(0);

  const double floor = half_split_floor(xs);
  const double w1 = w1_distance_1d(os, xs);
  v.add_metric(prefix + "w1_self_floor", floor);
  v.add_metric(prefix + "w1_orbit_ensemble", w1);
  v.add_metric(prefix + "w1_orbit_ensemble_over_floor", w1 / floor);
  v.add_metric(prefix + "ensemble_variance", [&] {
    double m = 0, q = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    for (double x : xs) q += (x - m) * (x - m);
    return q / static_cast<double>(xs.size() - 1);
  }());

  const std::size_t bins = cfg.count("bins");
  const Range r = span_of(xs, os);
  ctx.write(prefix + "ensemble_hist.csv", csv_of(make_histogram(xs, bins, r)));
  ctx.write(prefix + "orbit_hist.csv", csv_of(make_histogram(os, bins, r)));
  ctx.write(prefix + "orbit_trace.csv", orbit_prefix_csv(orbit, cfg.count("trace_length")));

  if (obj.micro() && obj.micro()->noise()) {
    const GibbsDensity g(obj.macro(), eta, obj.micro()->noise()->sigma2());
    v.add_metric(prefix + "ks_ensemble_gibbs", ks_distance(xs, [&g](double x) { return g.cdf(x); }));
    v.add_metric(prefix + "ks_orbit_gibbs", ks_distance(os, [&g](double x) { return g.cdf(x); }));
    v.add_metric(prefix + "w1_ensemble_gibbs", w1_distance_1d(xs, g));
    v.add_metric(prefix + "gibbs_sigma2", g.sigma2());
    ctx.write(prefix + "gibbs_density.csv", csv_of(g, 4096));
  }
}

inline void common_params(std::vector<ParamSpec>& s) {
  s.insert(s.begin(), {{"seed", ParamType::integer, "42", "", "master seed"},
                       {"workers", ParamType::integer, "1", "", "worker threads (results do not depend on it)"},
                       {"out", ParamType::text, "gdchaos-out", "", "output directory"}});
}

}  // namespace detail

// ---------------------------------------------------------------- schemas

inline std::vector<ParamSpec> ergodicity_1d_schema() {
  std::vector<ParamSpec> s = {
      {"macro", ParamType::text, "quartic", "", "macro catalog id"},
      {"micro", ParamType::text, "sin", "", "micro catalog id"},
      {"epsilon", ParamType::real, "1e-6", "", "micro scale"},
      {"eta", ParamType::real, "0.1", "", "learning rate"},
      {"ensemble_size", ParamType::integer, "100000", "4000", "ensemble members"},
      {"ensemble_steps", ParamType::integer, "10000", "500", "ensemble steps"},
      {"orbit_steps", ParamType::integer, "10000000", "100000", "recorded orbit length"},
      {"burn_in", ParamType::integer, "10000", "1000", "orbit burn-in"},
      {"init_lo", ParamType::real, "-2", "", "initial box lower edge"},
      {"init_hi", ParamType::real, "2", "", "initial box upper edge"},
      {"x0", ParamType::real, "0.5", "", "orbit start"},
      {"bins", ParamType::integer, "200", "50", "histogram bins"},
      {"trace_length", ParamType::integer, "10000", "1000", "orbit states written to the trace file"},
      {"tol.ks", ParamType::real, "0.05", "", "max KS(ensemble, Gibbs)"},
      {"tol.floor_multiple", ParamType::real, "3", "", "max W1(orbit, ensemble) / self-distance floor"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> aperiodic_schema() {
  std::vector<ParamSpec> s = {
      {"quasi_macro", ParamType::text, "quartic", "", "macro paired with the quasiperiodic micro"},
      {"quasi_epsilon", ParamType::real, "1e-6", "", "quasiperiodic micro scale"},
      {"modulated_macro", ParamType::text, "quadratic", "", "macro paired with the modulated micro"},
      {"modulated_epsilon", ParamType::real, "1e-4", "", "modulated micro scale"},
      {"eta", ParamType::real, "0.1", "", "learning rate"},
      {"ensemble_size", ParamType::integer, "100000", "4000", "ensemble members"},
      {"ensemble_steps", ParamType::integer, "10000", "500", "ensemble steps"},
      {"orbit_steps", ParamType::integer, "10000000", "100000", "recorded orbit length"},
      {"burn_in", ParamType::integer, "10000", "1000", "orbit burn-in"},
      {"init_lo", ParamType::real, "-2", "", "initial box lower edge"},
      {"init_hi", ParamType::real, "2", "", "initial box upper edge"},
      {"x0", ParamType::real, "0.5", "", "orbit start"},
      {"bins", ParamType::integer, "200", "50", "histogram bins"},
      {"trace_length", ParamType::integer, "10000", "1000", "orbit states written to the trace file"},
      {"tol.ks", ParamType::real, "0.05", "", "max KS(ensemble, Gibbs) for the quasiperiodic micro"},
      {"tol.floor_multiple", ParamType::real, "3", "", "max W1(orbit, ensemble) / self-distance floor"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> matyas_2d_schema() {
  std::vector<ParamSpec> s = {
      {"epsilon", ParamType::real, "1e-7", "", "micro scale of sincos2d"},
      {"eta", ParamType::real, "0.01", "", "learning rate of the map comparison"},
      {"ensemble_size", ParamType::integer, "10000", "1000", "ensemble members"},
      {"ensemble_steps", ParamType::integer, "20000", "2000", "ensemble steps"},
      {"init_lo", ParamType::real, "-2", "", "initial box lower edge (both axes)"},
      {"init_hi", ParamType::real, "2", "", "initial box upper edge (both axes)"},
      {"slices", ParamType::integer, "64", "16", "projections for sliced W1"},
      {"orbit_steps", ParamType::integer, "1000000", "20000", "single-orbit length"},
      {"burn_in", ParamType::integer, "20000", "2000", "single-orbit burn-in"},
      {"bins", ParamType::integer, "60", "20", "histogram bins per axis"},
      {"eta_list", ParamType::real_list, "0.1, 0.01, 0.001", "0.1, 0.05", "learning rates of the rescaled comparison"},
      {"rescaled_members", ParamType::integer, "2000", "500", "ensemble members per rescaled comparison"},
      {"relax", ParamType::real, "8", "2", "rescaled runs take relax / (eta mu) steps"},
      {"tol.floor_multiple", ParamType::real, "2", "", "max sliced W1(phi, phi_hat) / self-distance floor"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> lyapunov_sweep_schema() {
  std::vector<ParamSpec> s = {
      {"macro", ParamType::text, "double-well:k=1", "", "macro of the 1D sweeps"},
      {"epsilon", ParamType::real, "1e-6", "", "micro scale of the eta sweeps"},
      {"eta_list", ParamType::real_list, "0.001, 0.0031622776601683794, 0.01, 0.031622776601683794, 0.1", "0.01, 0.1",
       "learning rates of the eta sweeps"},
      {"fixed_eta", ParamType::real, "0.01", "", "learning rate of the epsilon sweep"},
      {"epsilon_list", ParamType::real_list, "1e-5, 1e-6, 1e-7", "1e-6", "micro scales of the epsilon sweep"},
      {"orbit_steps", ParamType::integer, "10000000", "100000", "steps averaged per estimate"},
      {"burn_in", ParamType::integer, "1000", "100", "discarded steps"},
      {"restarts", ParamType::integer, "5", "2", "random starts for the start-independence check"},
      {"matyas_epsilon", ParamType::real, "1e-5", "", "micro scale of the 2D estimate"},
      {"matyas_eta", ParamType::real, "0.1", "", "learning rate of the 2D estimate"},
      {"m_sin", ParamType::real, "-0.6931", "", "reference m for the periodic micro"},
      {"m_quasi", ParamType::real, "-0.0117", "", "reference m for the quasiperiodic micro"},
      {"m_sincos2d", ParamType::real, "-0.2669", "", "reference m for the 2D micro"},
      {"tol.lyapunov", ParamType::real, "0.1", "", "max |lambda - ln(eta/eps) - m|"},
      {"tol.restart_spread", ParamType::real, "0.05", "", "max spread of lambda over random starts"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> bifurcation_schema() {
  std::vector<ParamSpec> s = {
      {"macro", ParamType::text, "quartic", "", "macro catalog id"},
      {"micro", ParamType::text, "cos-neg", "", "micro catalog id"},
      {"epsilon", ParamType::real, "1e-3", "", "micro scale"},
      {"eta_min", ParamType::real, "0.02", "", "first learning rate, in units of eps"},
      {"eta_step", ParamType::real, "0.04", "0.08", "grid spacing, in units of eps"},
      {"eta_count", ParamType::integer, "125", "62", "grid points"},
      {"burn_in", ParamType::integer, "200000", "50000", "steps discarded per learning rate"},
      {"record", ParamType::integer, "4096", "1024", "iterates recorded per learning rate"},
      {"x0", ParamType::real, "0.1", "", "start, in units of eps"},
      {"tol.first_aperiodic_lo", ParamType::real, "3", "", "first aperiodic eta / eps lower bound"},
      {"tol.first_aperiodic_hi", ParamType::real, "4", "", "first aperiodic eta / eps upper bound"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> momentum_schema() {
  std::vector<ParamSpec> s = {
      {"macro", ParamType::text, "quadratic", "", "macro catalog id"},
      {"micro", ParamType::text, "sin", "", "micro catalog id"},
      {"epsilon", ParamType::real, "1e-4", "", "micro scale"},
      {"eta", ParamType::real, "0.01", "", "learning rate"},
      {"gamma", ParamType::real, "0.9", "", "heavy-ball momentum"},
      {"mu", ParamType::real, "1", "", "NAG-SC strong-convexity hint"},
      {"orbit_steps", ParamType::integer, "10000000", "200000", "recorded orbit length"},
      {"burn_in", ParamType::integer, "10000", "", "orbit burn-in"},
      {"x0", ParamType::real, "0.5", "", "first orbit start"},
      {"x0_alt", ParamType::real, "-0.7", "", "independent orbit start (noise floor)"},
      {"bins", ParamType::integer, "200", "50", "histogram bins"},
      {"trace_length", ParamType::integer, "10000", "1000", "orbit states written to the trace file"},
      {"tol.variance_multiple", ParamType::real, "100", "", "min orbit variance / eps^2"},
      {"tol.floor_multiple", ParamType::real, "3", "", "max W1(first half, second half) / floor"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> escape_dichotomy_schema() {
  std::vector<ParamSpec> s = {
      {"k_escape", ParamType::real, "0.02", "", "shallow double well"},
      {"k_trap", ParamType::real, "5", "", "deep double well"},
      {"eta", ParamType::real, "0.05", "", "learning rate of the escape runs"},
      {"epsilon", ParamType::real, "1e-4", "", "micro scale of the escape runs"},
      {"x0", ParamType::real, "0.5", "", "start in the right well"},
      {"orbit_steps", ParamType::integer, "10000000", "200000", "steps per escape run"},
      {"gauss_k", ParamType::real, "5", "", "double well of the Gaussian comparison"},
      {"gauss_epsilon", ParamType::real, "1e-6", "", "micro scale of the Gaussian comparison"},
      {"eta_list", ParamType::real_list, "0.05, 0.02, 0.01, 0.001", "0.05, 0.01, 0.001", "learning rates of the Gaussian comparison"},
      {"ensemble_size", ParamType::integer, "20000", "2000", "ensemble members"},
      {"init_lo", ParamType::real, "0.5", "", "initial box lower edge"},
      {"init_hi", ParamType::real, "1.5", "", "initial box upper edge"},
      {"relax", ParamType::real, "20", "5", "ensemble steps = relax / eta + 2000"},
      {"bins", ParamType::integer, "100", "40", "histogram bins"},
      {"tol.ks_smallest_eta", ParamType::real, "0.05", "", "max KS at the smallest learning rate"},
  };
  detail::common_params(s);
  return s;
}

inline std::vector<ParamSpec> residual_orders_schema() {
  std::vector<ParamSpec> s = {
      {"eta_list", ParamType::real_list, "0.2, 0.1, 0.05, 0.025", "", "learning rates of the slope fits"},
      {"mc_samples", ParamType::integer, "100000000", "1000000", "paired samples per invariance residual"},
      {"bump_radius", ParamType::real, "0", "", "test-function radius (0: six Gibbs std at the largest eta)"},
      {"moment_samples", ParamType::integer, "1000000", "100000", "samples per gradient moment"},
      {"coupling_eta", ParamType::real, "0.1", "", "learning rate of the coupling runs"},
      {"coupling_steps", ParamType::integer, "5000", "2000", "max steps per coupled pair"},
      {"coupling_pairs", ParamType::integer, "16", "4", "coupled pairs"},
      {"me_epsilon", ParamType::real, "1e-4", "", "micro scale of the modified-equation check"},
      {"me_eta_ratio", ParamType::real, "10", "", "eta / eps of the modified-equation check"},
      {"me_points", ParamType::integer, "10000", "1000", "test points uniform on [-2, 2]"},
      {"tol.residual_slope_lo", ParamType::real, "2.7", "", "invariance-residual slope lower bound"},
      {"tol.residual_slope_hi", ParamType::real, "3.3", "", "invariance-residual slope upper bound"},
      {"tol.quadratic_slope_lo", ParamType::real, "0.95", "", "quadratic moment slope lower bound"},
      {"tol.quadratic_slope_hi", ParamType::real, "1.05", "", "quadratic moment slope upper bound"},
      {"tol.quartic_slope_lo", ParamType::real, "1.15", "", "quartic moment slope lower bound"},
      {"tol.quartic_slope_hi", ParamType::real, "1.35", "", "quartic moment slope upper bound"},
      {"tol.coupling_exact", ParamType::real, "1e-9", "", "max |rate - 0.9| on the quadratic"},
      {"tol.coupling_slack", ParamType::real, "0.01", "", "allowed excess over the theoretical rate"},
      {"tol.me_fraction", ParamType::real, "0.9", "", "min fraction of points with |eta g2| >= |g|"},
  };
  detail::common_params(s);
  return s;
}

// ---------------------------------------------------------------- runners

inline void echo_parameters(Verdict& v, const ExperimentConfig& cfg) {
  v.experiment = cfg.experiment();
  v.seed = cfg.count("seed");
  for (const auto& p : cfg.schema())
    if (p.key != "workers" && p.key != "out") v.parameters.emplace_back(p.key, cfg.text(p.key));
}

inline Verdict run_ergodicity_1d(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const double eta = cfg.real("eta");
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  const MultiscaleObjective obj(catalog_macro(cfg.text("macro")),
                                catalog_micro(cfg.text("micro"), cfg.real("epsilon")));
  detail::ergodicity_checks(v, cfg, ctx, obj, eta, "", 10);
  if (v.has_metric("ks_ensemble_gibbs"))
    v.require("C5a", "KS(ensemble, rescaled Gibbs)", "ks_ensemble_gibbs", CompareOp::le, cfg.real("tol.ks"));
  v.require("C5b", "W1(orbit, ensemble) within a multiple of the self-distance floor",
            "w1_orbit_ensemble_over_floor", CompareOp::le, cfg.real("tol.floor_multiple"));
  return v;
}

inline Verdict run_aperiodic(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const double eta = cfg.real("eta");
  const MultiscaleObjective quasi(catalog_macro(cfg.text("quasi_macro")),
                                  catalog_micro("quasi", cfg.real("quasi_epsilon")));
  const MultiscaleObjective mod(catalog_macro(cfg.text("modulated_macro")),
                                catalog_micro("modulated", cfg.real("modulated_epsilon")));
  detail::ergodicity_checks(v, cfg, ctx, quasi, eta, "quasi.", 20);
  detail::ergodicity_checks(v, cfg, ctx, mod, eta, "modulated.", 30);
  v.require("quasi.gibbs", "quasiperiodic micro: KS(ensemble, Gibbs with sigma^2 = 3/2)",
            "quasi.ks_ensemble_gibbs", CompareOp::le, cfg.real("tol.ks"));
  v.require("quasi.ergodic", "quasiperiodic micro: W1(orbit, ensemble) / floor",
            "quasi.w1_orbit_ensemble_over_floor", CompareOp::le, cfg.real("tol.floor_multiple"));
  v.require("modulated.ergodic", "modulated micro: W1(orbit, ensemble) / floor",
            "modulated.w1_orbit_ensemble_over_floor", CompareOp::le, cfg.real("tol.floor_multiple"));
  return v;
}

inline Verdict run_matyas_2d(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const std::uint64_t seed = cfg.count("seed");
  const auto workers = static_cast<unsigned>(cfg.count("workers"));
  const double eta = cfg.real("eta");
  const MultiscaleObjective obj(MacroFunction::matyas(), catalog_micro("sincos2d", cfg.real("epsilon")));
  const MapSpec phi = MapSpec::gd(obj, eta);
  const MapSpec phi_hat = MapSpec::stochastic_from(obj, eta);
  const std::size_t members = cfg.count("ensemble_size");
  const std::uint64_t steps = cfg.count("ensemble_steps");
  const double lo = cfg.real("init_lo"), hi = cfg.real("init_hi");
  const std::size_t slices = cfg.count("slices");

  ctx.note(cfg.experiment(), "phi, phi_hat and a second phi_hat ensemble: " + std::to_string(members) +
                                 " members, " + std::to_string(steps) + " steps");
  const auto init_a = uniform_box(members, 2, lo, hi, derive_seed(seed, 40));
  const auto init_b = uniform_box(members, 2, lo, hi, derive_seed(seed, 41));
  const Ensemble e_phi = evolve_ensemble(phi, Ensemble::from_points(phi, init_a), steps, 0, workers);
  const Ensemble e_hat = evolve_ensemble(phi_hat, Ensemble::from_points(phi_hat, init_a), steps,
                                         derive_seed(seed, 42), workers);
  const Ensemble e_hat2 = evolve_ensemble(phi_hat, Ensemble::from_points(phi_hat, init_b), steps,
                                          derive_seed(seed, 43), workers);
  const std::uint64_t slice_seed = derive_seed(seed, 44);
  const double d_maps = sliced_w1(e_phi.x, e_hat.x, slices, slice_seed);
  const double floor = sliced_w1(e_hat.x, e_hat2.x, slices, slice_seed);
  v.add_metric("sliced_w1_phi_phihat", d_maps);
  v.add_metric("sliced_w1_self_floor", floor);
  v.add_metric("sliced_w1_phi_phihat_over_floor", d_maps / floor);

  const std::size_t bins = cfg.count("bins");
  const Range box{-1.5, 1.5};
  ctx.write("phi_ensemble_hist.csv", detail::csv_of(make_histogram_2d(e_phi.x, bins, bins, box, box)));
  ctx.write("phihat_ensemble_hist.csv", detail::csv_of(make_histogram_2d(e_hat.x, bins, bins, box, box)));

  // Single orbit of phi, histogrammed.
  const Orbit orbit = iterate(phi, phi.initial_state(Vec{0.5, -0.5}), cfg.count("orbit_steps"),
                              cfg.count("burn_in"), 1, 0);
  ctx.write("orbit_hist.csv", detail::csv_of(make_histogram_2d(orbit.x, bins, bins, box, box)));
  v.add_metric("sliced_w1_orbit_ensemble", sliced_w1(orbit.x, e_phi.x, slices, slice_seed));

  // Singleton ensemble against the orbit endpoint.
  {
    const Vec x0{0.3, -1.1};
    const Orbit o = iterate(phi, phi.initial_state(x0), 1000, 0, 1000, 0);
    const Ensemble one = evolve_ensemble(phi, Ensemble::from_points(phi, {x0}), 1000, 0, 1);
    v.add_metric("singleton_matches_orbit", (one.x == detail::slice(o.x, 2, 4)) ? 1.0 : 0.0);
  }

  // phi ensembles against Gibbs samples after the 1/sqrt(eta) rescale.
  const auto etas = cfg.reals("eta_list");
  const std::size_t m = cfg.count("rescaled_members");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double e = etas[i];
    const MapSpec map = MapSpec::gd(obj, e);
    const auto n = static_cast<std::uint64_t>(std::ceil(cfg.real("relax") / (e * 0.04)));
    ctx.note(cfg.experiment(), "rescaled comparison at eta=" + detail::format_real(e) + ", " +
                                   std::to_string(n) + " steps");
    const auto init = uniform_box(m, 2, lo, hi, derive_seed(seed, 50 + 3 * static_cast<std::uint32_t>(i)));
    Ensemble ens = evolve_ensemble(map, Ensemble::from_points(map, init), n, 0, workers);
    const GibbsDensity g(MacroFunction::matyas(), e, 0.5);
    std::vector<double> ga = gibbs_sample(g, m, derive_seed(seed, 51 + 3 * static_cast<std::uint32_t>(i)), workers);
    std::vector<double> gb = gibbs_sample(g, m, derive_seed(seed, 52 + 3 * static_cast<std::uint32_t>(i)), workers);
    const double s = 1.0 / std::sqrt(e);
    for (double& x : ens.x) x *= s;
    for (double& x : ga) x *= s;
    for (double& x : gb) x *= s;
    const std::string tag = "eta=" + detail::format_real(e);
    const double d = sliced_w1(ens.x, ga, slices, slice_seed);
    const double f = sliced_w1(gb, ga, slices, slice_seed);
    v.add_metric("rescaled." + tag + ".sliced_w1_phi_gibbs", d);
    v.add_metric("rescaled." + tag + ".sliced_w1_self_floor", f);
    v.add_metric("rescaled." + tag + ".ratio", d / f);
    const Range rb{-4.0, 4.0};
    ctx.write("rescaled_phi_hist_eta" + detail::format_real(e) + ".csv",
              detail::csv_of(make_histogram_2d(ens.x, bins, bins, rb, rb)));
  }

  v.require("C6", "sliced W1(phi ensemble, phi_hat ensemble) within a multiple of the floor",
            "sliced_w1_phi_phihat_over_floor", CompareOp::le, cfg.real("tol.floor_multiple"));
  v.require("singleton", "singleton ensemble equals the orbit endpoint", "singleton_matches_orbit",
            CompareOp::eq, 1.0);
  return v;
}

inline Verdict run_lyapunov_sweep(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const std::uint64_t seed = cfg.count("seed");
  const std::uint64_t n = cfg.count("orbit_steps"), burn = cfg.count("burn_in");
  const MacroFunction macro = catalog_macro(cfg.text("macro"));
  const double eps = cfg.real("epsilon");
  const auto etas = cfg.reals("eta_list");
  CounterRng starts(derive_seed(seed, 60), 0);
  auto random_start = [&starts] { return Vec{0.2 + 1.3 * starts.uniform()}; };

  std::ostringstream rows;
  rows.precision(17);
  rows << "micro,eta,epsilon,x0,lambda,residual\n";
  auto record = [&rows](const std::string& micro, const LyapunovEstimate& e) {
    rows << micro << ',' << e.eta << ',' << e.epsilon << ',' << e.x0[0] << ',' << e.lambda << ','
         << e.residual << '\n';
  };

  for (const std::string micro : {"sin", "quasi"}) {
    const MultiscaleObjective obj(macro, catalog_micro(micro, eps));
    double sum = 0.0, worst = 0.0;
    const double ref = cfg.real(micro == "sin" ? "m_sin" : "m_quasi");
    for (double eta : etas) {
      ctx.note(cfg.experiment(), micro + " eta=" + detail::format_real(eta));
      const Vec x0 = random_start();
      const LyapunovEstimate e = lyapunov(obj, eta, x0, n, burn, ref);
      record(micro, e);
      v.add_metric(micro + ".eta=" + detail::format_real(eta) + ".residual", e.residual);
      sum += e.residual;
      worst = std::fmax(worst, std::fabs(e.residual - ref));
    }
    const double mean = sum / static_cast<double>(etas.size());
    v.add_metric(micro + ".mean_residual", mean);
    v.add_metric(micro + ".mean_deviation", std::fabs(mean - ref));
    v.add_metric(micro + ".max_deviation", worst);
    v.add_metric(micro + ".m_quadrature", m_constant(catalog_micro(micro, eps)));
  }

  {
    const MultiscaleObjective obj(macro, catalog_micro("sin", eps));
    const double eta = cfg.real("fixed_eta");
    double worst = 0.0;
    for (double e_eps : cfg.reals("epsilon_list")) {
      const MultiscaleObjective o(macro, catalog_micro("sin", e_eps));
      const LyapunovEstimate e = lyapunov(o, eta, random_start(), n, burn, cfg.real("m_sin"));
      record("sin", e);
      v.add_metric("sin.eps=" + detail::format_real(e_eps) + ".residual", e.residual);
      worst = std::fmax(worst, std::fabs(e.residual - cfg.real("m_sin")));
    }
    v.add_metric("sin.eps_sweep_max_deviation", worst);

    double lo = INFINITY, hi = -INFINITY;
    for (std::uint64_t r = 0; r < cfg.count("restarts"); ++r) {
      const LyapunovEstimate e = lyapunov(obj, eta, random_start(), n, burn);
      lo = std::fmin(lo, e.lambda);
      hi = std::fmax(hi, e.lambda);
    }
    v.add_metric("sin.restart_spread", hi - lo);
  }

  {
    const double e2 = cfg.real("matyas_epsilon"), eta2 = cfg.real("matyas_eta");
    const MultiscaleObjective obj(MacroFunction::matyas(), catalog_micro("sincos2d", e2));
    ctx.note(cfg.experiment(), "matyas + sincos2d");
    const Vec x0{-1.0 + 2.0 * starts.uniform(), -1.0 + 2.0 * starts.uniform()};
    const LyapunovEstimate e = lyapunov(obj, eta2, x0, n, burn, cfg.real("m_sincos2d"));
    rows << "sincos2d," << e.eta << ',' << e.epsilon << ',' << x0[0] << ',' << e.lambda << ','
         << e.residual << '\n';
    v.add_metric("sincos2d.residual", e.residual);
    v.add_metric("sincos2d.deviation", std::fabs(e.residual - cfg.real("m_sincos2d")));
    v.add_metric("sincos2d.m_quadrature", m_constant(catalog_micro("sincos2d", e2)));
  }
  ctx.write("lyapunov_rows.csv", rows.str());

  const double tol = cfg.real("tol.lyapunov");
  v.require("C1", "periodic micro: mean of lambda - ln(eta/eps) near m", "sin.mean_deviation",
            CompareOp::le, tol);
  v.require("C2", "quasiperiodic micro: mean of lambda - ln(eta/eps) near m", "quasi.mean_deviation",
            CompareOp::le, tol);
  v.require("C3", "matyas + sincos2d: lambda - ln(eta/eps) near m", "sincos2d.deviation",
            CompareOp::le, tol);
  v.require("eps-sweep", "periodic micro, epsilon sweep: every residual near m",
            "sin.eps_sweep_max_deviation", CompareOp::le, tol);
  v.require("restarts", "lambda independent of the start", "sin.restart_spread", CompareOp::le,
            cfg.real("tol.restart_spread"));
  return v;
}

inline Verdict run_bifurcation(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const double eps = cfg.real("epsilon");
  const MicroScale micro = catalog_micro(cfg.text("micro"), eps);
  const MultiscaleObjective obj(catalog_macro(cfg.text("macro")), micro);
  std::vector<double> grid;
  for (std::uint64_t j = 0; j < cfg.count("eta_count"); ++j)
    grid.push_back(eps * (cfg.real("eta_min") + cfg.real("eta_step") * static_cast<double>(j)));
  BifurcationSettings s;
  s.burn_in = cfg.count("burn_in");
  s.record = cfg.count("record");
  s.workers = static_cast<unsigned>(cfg.count("workers"));
  ctx.note(cfg.experiment(), "scanning " + std::to_string(grid.size()) + " learning rates");
  const BifurcationDiagram d = bifurcation_scan(obj, grid, Vec{cfg.real("x0") * eps}, s);
  {
    std::ostringstream a, b;
    d.write_points_csv(a);
    d.write_summary_csv(b);
    ctx.write("bifurcation_points.csv", a.str());
    ctx.write("bifurcation_summary.csv", b.str());
  }
  const auto first = d.first_aperiodic();
  v.add_metric("first_aperiodic_eta_over_eps", first ? *first / eps : NAN);

  // Period-2 window around 2.5 eps: every grid point within 0.05 eps of it.
  bool window = false, all2 = true;
  for (const auto& r : d.rows)
    if (std::fabs(r.eta / eps - 2.5) <= 0.05 + 1e-9) {
      window = true;
      all2 = all2 && r.status == OrbitClass::periodic && r.period == 2;
    }
  v.add_metric("period2_window_at_2.5eps", window && all2 ? 1.0 : 0.0);

  // Periods before the first aperiodic row form 1, 2, 4, ... (nondecreasing).
  std::size_t prev = 1;
  std::size_t violations = 0;
  for (const auto& r : d.rows) {
    if (first && r.eta >= *first) break;
    if (r.status != OrbitClass::periodic) continue;
    const bool pow2 = (r.period & (r.period - 1)) == 0;
    if (!pow2 || r.period < prev) ++violations;
    prev = std::max(prev, r.period);
  }
  v.add_metric("doubling_violations", static_cast<double>(violations));
  if (micro.m_oracle()) {
    const double m = m_constant(micro);
    v.add_metric("m_quadrature", m);
    v.add_metric("chaos_threshold_over_eps", chaos_threshold(m, eps) / eps);
  }
  std::size_t diverged = 0;
  for (const auto& r : d.rows) diverged += r.status == OrbitClass::diverged;
  v.add_metric("diverged_rows", static_cast<double>(diverged));

  v.require("C4a", "first aperiodic learning rate / eps", "first_aperiodic_eta_over_eps",
            CompareOp::within, cfg.real("tol.first_aperiodic_lo"), cfg.real("tol.first_aperiodic_hi"));
  v.require("C4b", "period-2 window containing eta = 2.5 eps", "period2_window_at_2.5eps",
            CompareOp::eq, 1.0);
  v.require("doubling", "pre-chaos periods form a doubling sequence (one slack point)",
            "doubling_violations", CompareOp::le, 1.0);
  return v;
}

inline Verdict run_momentum(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const double eps = cfg.real("epsilon"), eta = cfg.real("eta");
  const MultiscaleObjective obj(catalog_macro(cfg.text("macro")), catalog_micro(cfg.text("micro"), eps));
  const std::uint64_t n = cfg.count("orbit_steps"), burn = cfg.count("burn_in");
  const std::vector<std::pair<std::string, MapSpec>> maps = {
      {"heavy_ball", MapSpec::heavy_ball(obj, eta, cfg.real("gamma"))},
      {"nag_sc", MapSpec::nag_sc(obj, eta, cfg.real("mu"))}};
  for (const auto& [name, map] : maps) {
    ctx.note(cfg.experiment(), name + ": two orbits of " + std::to_string(n) + " steps");
    const Orbit a = iterate(map, map.initial_state(Vec{cfg.real("x0")}), n, burn, 1, 0);
    const Orbit b = iterate(map, map.initial_state(Vec{cfg.real("x0_alt")}), n, burn, 1, 0);
    const std::vector<double> xa = a.coordinate(0), xb = b.coordinate(0);
    const std::size_t h = xa.size() / 2;
    const auto a1 = detail::slice(xa, 0, h), a2 = detail::slice(xa, h, 2 * h);
    const auto b1 = detail::slice(xb, 0, h), b2 = detail::slice(xb, h, 2 * h);
    const double halves = w1_distance_1d(a1, a2);
    const double floor = 0.25 * (w1_distance_1d(a1, b1) + w1_distance_1d(a2, b2) +
                                 w1_distance_1d(a1, b2) + w1_distance_1d(a2, b1));
    double mean = 0.0, var = 0.0;
    for (double x : xa) mean += x;
    mean /= static_cast<double>(xa.size());
    for (double x : xa) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xa.size() - 1);
    v.add_metric(name + ".orbit_variance", var);
    v.add_metric(name + ".variance_over_eps2", var / (eps * eps));
    v.add_metric(name + ".w1_halves", halves);
    v.add_metric(name + ".w1_floor", floor);
    v.add_metric(name + ".w1_halves_over_floor", halves / floor);
    const Range r = detail::span_of(xa, xb);
    ctx.write(name + "_orbit_hist.csv", detail::csv_of(make_histogram(xa, cfg.count("bins"), r)));
    ctx.write(name + "_orbit_trace.csv", detail::orbit_prefix_csv(a, cfg.count("trace_length")));
  }
  {
    const MapSpec hb0 = MapSpec::heavy_ball(obj, eta, 0.0);
    const MapSpec gd = MapSpec::gd(obj, eta);
    const std::uint64_t m = std::min<std::uint64_t>(n, 100000);
    const Orbit a = iterate(hb0, hb0.initial_state(Vec{cfg.real("x0")}), m, 0, 1, 0);
    const Orbit b = iterate(gd, gd.initial_state(Vec{cfg.real("x0")}), m, 0, 1, 0);
    v.add_metric("heavy_ball_gamma0_equals_gd", a.x == b.x ? 1.0 : 0.0);
  }
  for (const auto& [name, map] : maps) {
    v.require("C12." + name + ".variance", name + ": orbit variance exceeds a multiple of eps^2",
              name + ".variance_over_eps2", CompareOp::gt, cfg.real("tol.variance_multiple"));
    v.require("C12." + name + ".stationary", name + ": W1(first half, second half) / floor",
              name + ".w1_halves_over_floor", CompareOp::le, cfg.real("tol.floor_multiple"));
  }
  v.require("gamma0", "heavy ball with gamma = 0 reproduces GD bit for bit",
            "heavy_ball_gamma0_equals_gd", CompareOp::eq, 1.0);
  return v;
}

namespace detail {

/// Components of {|4k x (x^2 - 1)| <= 1} on a uniform grid over [-2, 2].
inline std::size_t s_components_by_scan(double k, std::size_t points) {
  std::size_t comps = 0;
  bool inside = false;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    const bool in = std::fabs(4.0 * k * x * (x * x - 1.0)) <= 1.0;
    if (in && !inside) ++comps;
    inside = in;
  }
  return comps;
}

}  // namespace detail

inline Verdict run_escape_dichotomy(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const std::uint64_t seed = cfg.count("seed");
  const auto workers = static_cast<unsigned>(cfg.count("workers"));
  const double eta = cfg.real("eta"), eps = cfg.real("epsilon"), x0 = cfg.real("x0");
  const std::uint64_t n = cfg.count("orbit_steps");

  std::ostringstream esc;
  esc.precision(17);
  esc << "k,eta,epsilon,steps,crossings,escaped,s_connected,k_critical\n";
  for (const auto& [tag, key] : {std::pair{"shallow", "k_escape"}, std::pair{"deep", "k_trap"}}) {
    ctx.note(cfg.experiment(), std::string("escape run ") + tag);
    const EscapeReport r = escape_scan(cfg.real(key), eta, eps, x0, n);
    esc << r.k << ',' << r.eta << ',' << r.epsilon << ',' << r.n << ',' << r.crossings << ','
        << r.escaped << ',' << r.s_connected << ',' << r.k_critical << '\n';
    v.add_metric(std::string(tag) + ".crossings", static_cast<double>(r.crossings));
    v.add_metric(std::string(tag) + ".s_connected", r.s_connected ? 1.0 : 0.0);
  }
  ctx.write("escape_runs.csv", esc.str());

  const double kc = kCriticalK;
  const bool below = s_set_analysis(kc * (1.0 - 1e-9)).s_connected;
  const bool above = s_set_analysis(kc * (1.0 + 1e-9)).s_connected;
  const bool at = s_set_analysis(kc).boundary;
  v.add_metric("s_flip_at_k_critical", below && !above && at ? 1.0 : 0.0);
  std::size_t disagreements = 0;
  for (double k : {0.02, 0.3, 0.6, 0.64, 0.66, 0.7, 1.0, 5.0}) {
    const bool roots = s_set_analysis(k).s_connected;
    const bool scan = detail::s_components_by_scan(k, 1000000) == 1;
    disagreements += roots != scan;
  }
  v.add_metric("s_root_scan_disagreements", static_cast<double>(disagreements));

  // Within-well ensembles against the local Gaussian at x* = 1.
  const double k = cfg.real("gauss_k");
  const MultiscaleObjective obj(MacroFunction::double_well(k), catalog_micro("sin", cfg.real("gauss_epsilon")));
  const auto etas = cfg.reals("eta_list");
  std::vector<double> ks_values;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double e = etas[i];
    const MapSpec map = MapSpec::gd(obj, e);
    const auto steps = static_cast<std::uint64_t>(std::ceil(cfg.real("relax") / e)) + 2000;
    ctx.note(cfg.experiment(), "Gaussian comparison at eta=" + detail::format_real(e) + ", " +
                                   std::to_string(steps) + " steps");
    const auto init = uniform_box(cfg.count("ensemble_size"), 1, cfg.real("init_lo"), cfg.real("init_hi"),
                                  derive_seed(seed, 70 + static_cast<std::uint32_t>(i)));
    const Ensemble ens = evolve_ensemble(map, Ensemble::from_points(map, init), steps, 0, workers);
    std::vector<double> u;
    for (double x : ens.x)
      if (x > 0.0) u.push_back(1.0 + (x - 1.0) / std::sqrt(e));
    // Rescaled Gaussian: the variance e sigma^2 / (2 f0''(1)) becomes sigma^2 / (16 k).
    const GaussianApprox ga = gaussian_approx(MacroFunction::double_well(k), e, 0.5, Vec{1.0});
    const double var = ga.covariance(0, 0) / e;
    const double ks = ks_distance(u, [var](double t) { return normal_cdf(t, 1.0, var); });
    ks_values.push_back(ks);
    const std::string tag = "gauss.eta=" + detail::format_real(e);
    v.add_metric(tag + ".ks", ks);
    v.add_metric(tag + ".kept_fraction", static_cast<double>(u.size()) / static_cast<double>(ens.size()));
    ctx.write("gauss_hist_eta" + detail::format_real(e) + ".csv",
              detail::csv_of(make_histogram(u, cfg.count("bins"), {1.0 - 6.0 * std::sqrt(var), 1.0 + 6.0 * std::sqrt(var)})));
  }
  // Learning rates in the list are descending; KS must decrease along it.
  bool monotone = true;
  for (std::size_t i = 1; i < ks_values.size(); ++i)
    monotone = monotone && etas[i] < etas[i - 1] && ks_values[i] < ks_values[i - 1];
  v.add_metric("gauss.ks_monotone", monotone ? 1.0 : 0.0);
  v.add_metric("gauss.ks_smallest_eta", ks_values.back());

  v.require("C10a", "shallow well (k below critical) is escaped", "shallow.crossings", CompareOp::gt, 0.0);
  v.require("C10b", "deep well (k above critical) is never left", "deep.crossings", CompareOp::eq, 0.0);
  v.require("C10c", "S-connectedness flips exactly at k = 3 sqrt(3) / 8", "s_flip_at_k_critical",
            CompareOp::eq, 1.0);
  v.require("C10d", "root analysis agrees with a grid sign scan", "s_root_scan_disagreements",
            CompareOp::eq, 0.0);
  v.require("C11a", "KS to the local Gaussian decreases with eta", "gauss.ks_monotone", CompareOp::eq, 1.0);
  v.require("C11b", "KS to the local Gaussian at the smallest eta", "gauss.ks_smallest_eta", CompareOp::le,
            cfg.real("tol.ks_smallest_eta"));
  return v;
}

inline Verdict run_residual_orders(const ExperimentConfig& cfg, const RunContext& ctx) {
  Verdict v;
  echo_parameters(v, cfg);
  const std::uint64_t seed = cfg.count("seed");
  const auto workers = static_cast<unsigned>(cfg.count("workers"));
  const auto etas = cfg.reals("eta_list");
  const NoiseModel noise = NoiseModel::neg_cos();
  const double sigma2 = noise.sigma2();

  // Invariance residual on the quadratic with a fixed bump.
  const MacroFunction quad = MacroFunction::quadratic();
  const double eta_max = *std::max_element(etas.begin(), etas.end());
  double radius = cfg.real("bump_radius");
  if (!(radius > 0.0)) radius = 6.0 * std::sqrt(eta_max * sigma2 / 2.0);
  v.add_metric("bump_radius", radius);
  const TestFunction h = TestFunction::bump(Vec{0.0}, radius);
  std::vector<double> residuals, q_moments, q4_moments;
  std::ostringstream rows;
  rows.precision(17);
  rows << "eta,residual,residual_se,quadratic_moment,quadratic_moment_se,quartic_moment,quartic_moment_se\n";
  std::size_t inconclusive = 0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double e = etas[i];
    const std::string tag = "eta=" + detail::format_real(e);
    ctx.note(cfg.experiment(), "invariance residual at " + tag);
    const GibbsDensity g(quad, e, sigma2);
    const McEstimate r = invariance_residual(g, noise, h, cfg.count("mc_samples"),
                                             derive_seed(seed, 80 + static_cast<std::uint32_t>(i)), workers);
    if (r.inconclusive) {
      ++inconclusive;
      v.flags.push_back("invariance residual inconclusive at " + tag);
    }
    residuals.push_back(r.estimate);
    v.add_metric("residual." + tag, r.estimate);
    v.add_metric("residual." + tag + ".se", r.std_error);

    const McEstimate mq = grad_second_moment(g, cfg.count("moment_samples"),
                                             derive_seed(seed, 90 + static_cast<std::uint32_t>(i)), workers);
    const GibbsDensity g4(MacroFunction::quartic(), e, sigma2);
    const McEstimate m4 = grad_second_moment(g4, cfg.count("moment_samples"),
                                             derive_seed(seed, 100 + static_cast<std::uint32_t>(i)), workers);
    q_moments.push_back(mq.estimate);
    q4_moments.push_back(m4.estimate);
    v.add_metric("moment.quadratic." + tag, mq.estimate);
    v.add_metric("moment.quartic." + tag, m4.estimate);
    rows << e << ',' << r.estimate << ',' << r.std_error << ',' << mq.estimate << ',' << mq.std_error
         << ',' << m4.estimate << ',' << m4.std_error << '\n';
  }
  ctx.write("residual_orders.csv", rows.str());
  v.add_metric("residual.inconclusive_count", static_cast<double>(inconclusive));
  v.add_metric("residual.slope", loglog_slope(etas, residuals));
  v.add_metric("moment.quadratic.slope", loglog_slope(etas, q_moments));
  v.add_metric("moment.quartic.slope", loglog_slope(etas, q4_moments));
  v.add_metric("moment.quartic.bound_exponent", (2.0 * 3.0 - 1.0) / 4.0);

  // Coupling rates.
  const double ce = cfg.real("coupling_eta");
  ctx.note(cfg.experiment(), "coupling rates");
  const CouplingResult cq = coupling_rate(quad, noise, ce, cfg.count("coupling_steps"),
                                          cfg.count("coupling_pairs"), derive_seed(seed, 110), workers);
  const CouplingResult cm = coupling_rate(MacroFunction::matyas(), NoiseModel::sincos2d(), ce,
                                          cfg.count("coupling_steps"), cfg.count("coupling_pairs"),
                                          derive_seed(seed, 111), workers);
  v.add_metric("coupling.quadratic.rate", cq.rate);
  v.add_metric("coupling.quadratic.error", std::fabs(cq.rate - (1.0 - ce)));
  v.add_metric("coupling.matyas.rate", cm.rate);
  v.add_metric("coupling.matyas.theoretical", cm.theoretical);
  v.add_metric("coupling.matyas.excess", cm.rate - cm.theoretical);

  // Modified-equation terms at eta = ratio * eps.
  const double me_eps = cfg.real("me_epsilon");
  const double me_eta = cfg.real("me_eta_ratio") * me_eps;
  const MultiscaleObjective me_obj(quad, catalog_micro("sin", me_eps));
  CounterRng pts(derive_seed(seed, 120), 0);
  const std::uint64_t np = cfg.count("me_points");
  std::uint64_t big = 0;
  std::vector<double> r2, r3;
  for (std::uint64_t i = 0; i < np; ++i) {
    const double x = -2.0 + 4.0 * pts.uniform();
    const ModifiedEqTerms t = modified_eq_terms(me_obj, x, me_eta);
    if (t.eta_g2 >= t.g) ++big;
    r2.push_back(t.eta_g2 / t.g);
    r3.push_back(t.eta2_g3 / t.eta_g2);
  }
  auto median = [](std::vector<double> a) {
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
    return a[a.size() / 2];
  };
  v.add_metric("modified_eq.fraction_ratio_ge_1", static_cast<double>(big) / static_cast<double>(np));
  v.add_metric("modified_eq.median_g2_over_g", median(r2));
  v.add_metric("modified_eq.median_g3_over_g2", median(r3));

  v.require("C7", "invariance residual slope vs eta", "residual.slope", CompareOp::within,
            cfg.real("tol.residual_slope_lo"), cfg.real("tol.residual_slope_hi"));
  v.require("C8a", "quadratic gradient-moment slope", "moment.quadratic.slope", CompareOp::within,
            cfg.real("tol.quadratic_slope_lo"), cfg.real("tol.quadratic_slope_hi"));
  v.require("C8b", "quartic gradient-moment slope", "moment.quartic.slope", CompareOp::within,
            cfg.real("tol.quartic_slope_lo"), cfg.real("tol.quartic_slope_hi"));
  v.require("C9a", "quadratic coupling rate equals 1 - eta", "coupling.quadratic.error", CompareOp::le,
            cfg.real("tol.coupling_exact"));
  v.require("C9b", "matyas coupling rate within slack of max{|1-eta mu|, |1-eta L|}",
            "coupling.matyas.excess", CompareOp::le, cfg.real("tol.coupling_slack"));
  v.require("C13", "fraction of points with |eta g2| >= |g| at eta = 10 eps",
            "modified_eq.fraction_ratio_ge_1", CompareOp::ge, cfg.real("tol.me_fraction"));
  return v;
}

// ---------------------------------------------------------------- registry

struct ExperimentInfo {
  std::string id;
  std::string summary;
  std::vector<ParamSpec> (*schema)();
  Verdict (*run)(const ExperimentConfig&, const RunContext&);
};

inline const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> r = {
      {"ergodicity-1d", "ensemble and orbit statistics against the rescaled Gibbs law (quartic + sin)",
       ergodicity_1d_schema, run_ergodicity_1d},
      {"aperiodic", "ergodicity checks for quasiperiodic and modulated micro-scales", aperiodic_schema,
       run_aperiodic},
      {"matyas-2d", "deterministic vs stochastic map on the Matyas function", matyas_2d_schema, run_matyas_2d},
      {"lyapunov-sweep", "Lyapunov exponents against m + ln(eta/eps)", lyapunov_sweep_schema,
       run_lyapunov_sweep},
      {"bifurcation", "period doubling of GD as eta crosses the micro scale", bifurcation_schema,
       run_bifurcation},
      {"momentum", "stochastic behaviour of heavy ball and NAG-SC", momentum_schema, run_momentum},
      {"escape-dichotomy", "double-well escape and the local Gaussian law", escape_dichotomy_schema,
       run_escape_dichotomy},
      {"residual-orders", "invariance residual, gradient moments, coupling and modified-equation growth",
       residual_orders_schema, run_residual_orders},
  };
  return r;
}

inline const ExperimentInfo& find_experiment(std::string_view id) {
  for (const auto& e : experiment_registry())
    if (e.id == id) return e;
  throw ConfigError("unknown experiment '" + std::string(id) + "'");
}

inline ExperimentConfig default_config(std::string_view id, Preset preset = Preset::full) {
  const ExperimentInfo& e = find_experiment(id);
  return ExperimentConfig(e.id, e.schema(), preset);
}

/// Parses a config document. The experiment key selects the schema unless
/// `expected` names one; defaults come from `preset`.
inline ExperimentConfig parse_config(std::istream& is, Preset preset = Preset::full,
                                     std::string_view expected = {}) {
  const std::vector<ConfigEntry> entries = parse_config_entries(is);
  std::string experiment(expected);
  bool version_seen = false;
  for (const auto& e : entries) {
    if (e.key == "schema_version") {
      if (detail::parse_integer(e.value, e.key) != kConfigSchemaVersion)
        throw ConfigError("unsupported schema_version " + e.value);
      version_seen = true;
    }
    if (e.key == "experiment") {
      if (!experiment.empty() && experiment != e.value)
        throw ConfigError("config is for experiment '" + e.value + "', not '" + experiment + "'");
      experiment = e.value;
    }
  }
  if (!version_seen) throw ConfigError("config lacks schema_version");
  if (experiment.empty()) throw ConfigError("config lacks an experiment key");
  ExperimentConfig cfg = default_config(experiment, preset);
  for (const auto& e : entries) {
    if (e.key == "schema_version" || e.key == "experiment") continue;
    try {
      cfg.set(e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text, Preset preset = Preset::full) {
  std::istringstream is(text);
  return parse_config(is, preset);
}

/// Runs an experiment; divergence and domain problems become a failed verdict.
inline Verdict run_experiment(const ExperimentConfig& cfg, const RunContext& ctx) {
  const ExperimentInfo& info = find_experiment(cfg.experiment());
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = info.run(cfg, ctx);
  } catch (const DivergenceError& e) {
    v = Verdict{};
    echo_parameters(v, cfg);
    v.diverged = true;
    v.error = e.what();
  }
  v.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

/// verdict.json (deterministic) and timing.json (wall clock) in the output directory.
inline void write_verdict(const Verdict& v, const RunContext& ctx) {
  ctx.write("verdict.json", v.to_json().dump(2) + "\n");
  Json t;
  t["experiment"] = v.experiment;
  t["runtime_seconds"] = v.runtime_seconds;
  ctx.write("timing.json", t.dump(2) + "\n");
}

}  // namespace gdchaos
