#pragma once

// Chaos diagnostics for the GD map: Lyapunov exponents, period detection
// along a learning-rate sweep, Li-Yorke period-3 certificates, well escape,
// coupling rates of the stochastic map and modified-equation term growth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gdchaos/dynamics.hpp"
#include "gdchaos/errors.hpp"
#include "gdchaos/objective.hpp"
#include "gdchaos/parallel.hpp"
#include "gdchaos/stats.hpp"

namespace gdchaos {

// ---------------------------------------------------------------- Lyapunov

struct LyapunovEstimate {
  double lambda = 0.0;
  std::uint64_t n = 0;
  std::uint64_t burn_in = 0;
  Vec x0;
  double eta = 0.0;
  /// NaN when the objective has no micro-scale.
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> m_reference;
  /// lambda - ln(eta / eps).
  double residual = std::numeric_limits<double>::quiet_NaN();
  /// Steps where the Jacobian norm was exactly zero (excluded from the mean).
  std::uint64_t skipped = 0;
};

/// Orbit average of ln |I - eta Hess f(x_i)|_2 over n steps after burn_in.
inline LyapunovEstimate lyapunov(const MultiscaleObjective& obj, double eta, const Vec& x0,
                                 std::uint64_t n, std::uint64_t burn_in,
                                 std::optional<double> m_reference = std::nullopt) {
  if (!(eta > 0.0)) throw DomainError("learning rate must be positive");
  if (n < 100000) throw DomainError("lyapunov: n must be at least 1e5");
  if (!obj.has_hessian()) throw UnsupportedError(obj.id() + ": Lyapunov exponent needs Hessians");
  const std::size_t d = obj.dimension();
  Vec x = x0;
  for (std::uint64_t i = 0; i < burn_in; ++i) {
    x -= eta * obj.gradient(x);
    if (is_divergent(x)) throw DivergenceError(x, i + 1);
  }
  // Neumaier summation keeps the 1e7-term mean accurate.
  double sum = 0.0, comp = 0.0;
  std::uint64_t used = 0, skipped = 0;
  const Mat id = Mat::identity(d);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double norm = (id - eta * obj.hessian(x)).spectral_norm();
    if (norm > 0.0) {
      const double v = std::log(norm);
      const double t = sum + v;
      comp += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
      ++used;
    } else {
      ++skipped;
    }
    x -= eta * obj.gradient(x);
    if (is_divergent(x)) throw DivergenceError(x, burn_in + i + 1);
  }
  LyapunovEstimate e;
  e.lambda = used ? (sum + comp) / static_cast<double>(used) : -INFINITY;
  e.n = n;
  e.burn_in = burn_in;
  e.x0 = x0;
  e.eta = eta;
  e.skipped = skipped;
  e.m_reference = m_reference;
  if (obj.micro()) {
    e.epsilon = obj.micro()->epsilon();
    e.residual = e.lambda - std::log(eta / e.epsilon);
  }
  return e;
}

/// Learning rate above which the map is chaotic: e^{-m} eps.
inline double chaos_threshold(double m, double epsilon) {
  if (!std::isfinite(m)) throw DomainError("chaos_threshold: m must be finite");
  return std::exp(-m) * epsilon;
}

// ---------------------------------------------------------------- bifurcation

enum class OrbitClass { periodic, aperiodic, diverged };

inline std::string_view to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::periodic:
      return "periodic";
    case OrbitClass::aperiodic:
      return "aperiodic";
    case OrbitClass::diverged:
      return "diverged";
  }
  return "?";
}

struct BifurcationRow {
  double eta = 0.0;
  OrbitClass status = OrbitClass::aperiodic;
  /// Minimal detected period; 0 unless status is periodic.
  std::size_t period = 0;
  /// max_i |x_{i+p} - x_i| for the reported period (or the best candidate).
  double mismatch = 0.0;
  double tolerance = 0.0;
  /// Recorded attractor states, flat.
  std::vector<double> points;
};

struct BifurcationDiagram {
  std::size_t dim = 1;
  std::vector<BifurcationRow> rows;

  /// First learning rate classified aperiodic, if any.
  std::optional<double> first_aperiodic() const {
    for (const auto& r : rows)
      if (r.status == OrbitClass::aperiodic) return r.eta;
    return std::nullopt;
  }

  /// Long format: "eta,x1[,x2]" per recorded point.
  void write_points_csv(std::ostream& os) const {
    os.precision(17);
    os << "eta";
    for (std::size_t k = 0; k < dim; ++k) os << ",x" << (k + 1);
    os << '\n';
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.points.size(); i += dim) {
        os << r.eta;
        for (std::size_t k = 0; k < dim; ++k) os << ',' << r.points[i + k];
        os << '\n';
      }
  }

  void write_summary_csv(std::ostream& os) const {
    os.precision(17);
    os << "eta,status,period,mismatch,tolerance\n";
    for (const auto& r : rows)
      os << r.eta << ',' << to_string(r.status) << ',' << r.period << ',' << r.mismatch << ','
         << r.tolerance << '\n';
  }
};

struct BifurcationSettings {
  std::uint64_t burn_in = 200000;
  std::size_t record = 4096;
  /// Absolute tolerance; 0 selects 1e-9 (attractor diameter + eps).
  double period_tol = 0.0;
  unsigned workers = 1;
};

namespace detail {

inline BifurcationRow classify_orbit(const MultiscaleObjective& obj, double eta, const Vec& x0,
                                     const BifurcationSettings& s) {
  BifurcationRow row;
  row.eta = eta;
  const std::size_t d = obj.dimension();
  const MapSpec map = MapSpec::gd(obj, eta);
  Orbit o;
  try {
    o = iterate(map, map.initial_state(x0), s.record - 1, s.burn_in, 1, 0);
  } catch (const DivergenceError&) {
    row.status = OrbitClass::diverged;
    return row;
  }
  row.points = o.x;
  const std::size_t m = o.size();
  double diam = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < m; ++i) {
      lo = std::fmin(lo, o.x[i * d + k]);
      hi = std::fmax(hi, o.x[i * d + k]);
    }
    diam = std::fmax(diam, hi - lo);
  }
  const double eps = obj.micro() ? obj.micro()->epsilon() : 0.0;
  row.tolerance = s.period_tol > 0.0 ? s.period_tol : 1e-9 * (diam + eps);
  double best = INFINITY;
  for (std::size_t p = 1; p <= m / 4; ++p) {
    double mis = 0.0;
    for (std::size_t i = 0; i + p < m && mis <= row.tolerance; ++i)
      for (std::size_t k = 0; k < d; ++k)
        mis = std::fmax(mis, std::fabs(o.x[(i + p) * d + k] - o.x[i * d + k]));
    if (mis <= row.tolerance) {
      row.status = OrbitClass::periodic;
      row.period = p;
      row.mismatch = mis;
      return row;
    }
    best = std::fmin(best, mis);
  }
  row.status = OrbitClass::aperiodic;
  row.mismatch = best;
  return row;
}

}  // namespace detail

/// For every learning rate: burn in, record `record` iterates and detect the
/// minimal period p <= record / 4. Divergent runs become "diverged" rows.
inline BifurcationDiagram bifurcation_scan(const MultiscaleObjective& obj,
                                           const std::vector<double>& eta_grid, const Vec& x0,
                                           const BifurcationSettings& s = {}) {
  if (!std::is_sorted(eta_grid.begin(), eta_grid.end()))
    throw DomainError("bifurcation_scan: eta grid must be ascending");
  if (s.record < 8) throw DomainError("bifurcation_scan: record must be at least 8");
  BifurcationDiagram diag;
  diag.dim = obj.dimension();
  diag.rows.resize(eta_grid.size());
  parallel_chunks(eta_grid.size(), s.workers, [&](std::size_t i) {
    diag.rows[i] = detail::classify_orbit(obj, eta_grid[i], x0, s);
  });
  return diag;
}

// ---------------------------------------------------------------- period 3

struct Period3Certificate {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  /// true: d <= a < b < c; false: d >= a > b > c.
  bool ascending = true;
  double margin = 0.0;
};

inline constexpr double kPeriod3Slack = 1e-12;

namespace detail {

struct Triple {
  double b, c, d;
};

inline Triple three_steps(const MultiscaleObjective& obj, double eta, double a) {
  auto phi = [&](double x) { return x - eta * obj.gradient(Vec{x})[0]; };
  const double b = phi(a), c = phi(b);
  return {b, c, phi(c)};
}

/// Smallest gap of the Li-Yorke ordering; positive means the ordering holds.
inline double ordering_margin(double a, const Triple& t, bool ascending) {
  if (ascending) return std::fmin(std::fmin(a - t.d, t.b - a), t.c - t.b);
  return std::fmin(std::fmin(t.d - a, a - t.b), t.b - t.c);
}

}  // namespace detail

/// Re-iterates phi from a and checks the ordering with strict slack.
inline bool verify_period3(const MultiscaleObjective& obj, double eta, const Period3Certificate& cert) {
  const detail::Triple t = detail::three_steps(obj, eta, cert.a);
  if (t.b != cert.b || t.c != cert.c || t.d != cert.d) return false;
  if (cert.ascending) return cert.d <= cert.a && cert.a + kPeriod3Slack < cert.b && cert.b + kPeriod3Slack < cert.c;
  return cert.d >= cert.a && cert.a > cert.b + kPeriod3Slack && cert.b > cert.c + kPeriod3Slack;
}

/// Grid scan of the ordering margin over [lo, hi], then ternary refinement
/// around the best grid point. The grid pitch should not exceed eps / 20 to
/// resolve micro wells; coarser grids may miss certificates.
inline std::optional<Period3Certificate> find_period3(const MultiscaleObjective& obj, double eta,
                                                      Range interval, std::size_t grid_n) {
  if (obj.dimension() != 1) throw DomainError("find_period3 requires a 1D objective");
  if (grid_n < 2 || !(interval.lo < interval.hi)) throw DomainError("find_period3: bad grid");
  const double pitch = (interval.hi - interval.lo) / static_cast<double>(grid_n - 1);
  double best_margin = -INFINITY, best_a = interval.lo;
  bool best_asc = true;
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double a = interval.lo + pitch * static_cast<double>(i);
    detail::Triple t;
    try {
      t = detail::three_steps(obj, eta, a);
    } catch (const DivergenceError&) {
      continue;
    }
    if (!std::isfinite(t.d)) continue;
    for (bool asc : {true, false}) {
      const double m = detail::ordering_margin(a, t, asc);
      if (m > best_margin) {
        best_margin = m;
        best_a = a;
        best_asc = asc;
      }
    }
  }
  if (!(best_margin > -INFINITY)) return std::nullopt;
  // Local refinement of the continuous margin around the best grid point.
  double lo = std::fmax(interval.lo, best_a - pitch), hi = std::fmin(interval.hi, best_a + pitch);
  auto margin_at = [&](double a) {
    return detail::ordering_margin(a, detail::three_steps(obj, eta, a), best_asc);
  };
  for (int it = 0; it < 100 && hi - lo > 0.0; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (margin_at(m1) < margin_at(m2))
      lo = m1;
    else
      hi = m2;
  }
  double a = 0.5 * (lo + hi);
  if (margin_at(a) < best_margin) a = best_a;
  const detail::Triple t = detail::three_steps(obj, eta, a);
  Period3Certificate cert{a, t.b, t.c, t.d, best_asc, detail::ordering_margin(a, t, best_asc)};
  if (!verify_period3(obj, eta, cert)) return std::nullopt;
  return cert;
}

// ---------------------------------------------------------------- escape

/// 3 sqrt(3) / 8: the double-well parameter where S = {|f0'| <= 1} splits.
inline constexpr double kCriticalK = 0.649519052838329;

struct EscapeReport {
  double k = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  std::uint64_t n = 0;
  std::uint64_t crossings = 0;
  bool escaped = false;
  bool s_connected = false;
  /// k equals k_critical (within 1e-12 relative): S touches itself at one point.
  bool boundary = false;
  double k_critical = kCriticalK;
  /// Components of S as closed intervals.
  std::vector<Range> s_intervals;
};

namespace detail {

/// Real roots of 4k x^3 - 4k x - c = 0, ascending.
inline std::vector<double> depressed_cubic_roots(double k, double c) {
  // x^3 + p x + q = 0 with p = -1, q = -c / (4k).
  const double p = -1.0, q = -c / (4.0 * k);
  const double disc = -(4.0 * p * p * p + 27.0 * q * q);
  std::vector<double> r;
  if (disc > 0.0) {
    const double amp = 2.0 * std::sqrt(-p / 3.0);
    const double theta = std::acos(std::clamp(3.0 * q / (p * amp), -1.0, 1.0)) / 3.0;
    for (int j = 0; j < 3; ++j) r.push_back(amp * std::cos(theta - 2.0 * std::numbers::pi * j / 3.0));
  } else {
    const double s = std::sqrt(std::fmax(0.0, q * q / 4.0 + p * p * p / 27.0));
    r.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s));
  }
  std::sort(r.begin(), r.end());
  return r;
}

}  // namespace detail

/// Connectedness of S = {x : |4k x (x^2 - 1)| <= 1} from the roots of
/// 4k x (x^2 - 1) = +-1. g = 4k x(x^2-1) has local maximum 8k / (3 sqrt 3) at
/// -1/sqrt3; g = 1 has three real roots exactly when that maximum exceeds 1.
inline EscapeReport s_set_analysis(double k) {
  if (!(k > 0.0)) throw DomainError("double-well k must be positive");
  EscapeReport r;
  r.k = k;
  r.boundary = std::fabs(k - kCriticalK) <= 1e-12 * kCriticalK;
  const std::vector<double> up = detail::depressed_cubic_roots(k, 1.0);
  const std::vector<double> down = detail::depressed_cubic_roots(k, -1.0);
  if (up.size() == 3 && !r.boundary) {
    // g = 1 at u0 < u1 < u2 and g = -1 at -u2 < -u1 < -u0.
    r.s_connected = false;
    r.s_intervals = {{down[0], up[0]}, {up[1], down[1]}, {down[2], up[2]}};
  } else {
    r.s_connected = true;
    r.s_intervals = {{down.front(), up.back()}};
  }
  return r;
}

/// GD on k (x^2 - 1)^2 + eps sin(x / eps) from x0, counting sign changes.
inline EscapeReport escape_scan(double k, double eta, double epsilon, double x0, std::uint64_t n) {
  if (x0 == 0.0) throw DomainError("escape_scan: x0 must be nonzero");
  EscapeReport r = s_set_analysis(k);
  r.eta = eta;
  r.epsilon = epsilon;
  r.n = n;
  const MultiscaleObjective obj(MacroFunction::double_well(k), catalog_micro("sin", epsilon));
  double x = x0;
  bool positive = x0 > 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    x -= eta * obj.gradient(Vec{x})[0];
    if (!std::isfinite(x) || std::fabs(x) > kDivergenceBound) throw DivergenceError(Vec{x}, i + 1);
    if (x != 0.0 && (x > 0.0) != positive) {
      positive = x > 0.0;
      ++r.crossings;
    }
  }
  r.escaped = r.crossings > 0;
  return r;
}

// ---------------------------------------------------------------- coupling

struct CouplingResult {
  double rate = 0.0;
  std::vector<double> pair_rates;
  /// max{|1 - eta mu|, |1 - eta L|}.
  double theoretical = 0.0;
};

/// Pairs of stochastic orbits driven by one shared noise stream. The
/// per-pair rate is exp(slope) of a least-squares fit to ln |x_k - y_k|,
/// stopped once the gap falls below 1e-6 of the state scale (rounding floor).
inline CouplingResult coupling_rate(const MacroFunction& f0, const NoiseModel& noise, double eta,
                                    std::uint64_t n, std::size_t pairs, std::uint64_t seed,
                                    unsigned workers = 1) {
  if (!(eta > 0.0)) throw DomainError("learning rate must be positive");
  if (!f0.strong_convexity() || !f0.smoothness())
    throw UnsupportedError(f0.id() + ": coupling rate needs mu and L");
  if (pairs == 0 || n < 2) throw DomainError("coupling_rate: need pairs >= 1 and n >= 2");
  const std::size_t d = f0.dimension();
  CouplingResult out;
  out.theoretical = std::fmax(std::fabs(1.0 - eta * *f0.strong_convexity()),
                              std::fabs(1.0 - eta * *f0.smoothness()));
  out.pair_rates.assign(pairs, 0.0);
  parallel_chunks(pairs, workers, [&](std::size_t p) {
    CounterRng init(seed, static_cast<std::uint32_t>(p), 0xC0C0ull << 32);
    Vec x(d), y(d);
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = -2.0 + 4.0 * init.uniform();
      y[k] = -2.0 + 4.0 * init.uniform();
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::uint64_t step = 0; step <= n; ++step) {
      const double gap = (x - y).norm();
      const double scale = 1.0 + std::fmax(x.norm(), y.norm());
      if (!(gap > 1e-6 * scale)) break;
      const double t = static_cast<double>(step), l = std::log(gap);
      sx += t;
      sy += l;
      sxx += t * t;
      sxy += t * l;
      cnt += 1.0;
      if (step == n) break;
      CounterRng rng(seed, static_cast<std::uint32_t>(p), step);
      const Vec z = noise.sample(rng);
      x = x - eta * f0.gradient(x) + eta * z;
      y = y - eta * f0.gradient(y) + eta * z;
    }
    out.pair_rates[p] = cnt >= 2.0 ? std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx)) : 0.0;
  });
  double s = 0.0;
  for (double r : out.pair_rates) s += r;
  out.rate = s / static_cast<double>(pairs);
  return out;
}

// ---------------------------------------------------------------- modified equation

struct ModifiedEqTerms {
  double g = 0.0;         // |g|, g = -f'
  double eta_g2 = 0.0;    // |eta g2|, g2 = -g' g / 2
  double eta2_g3 = 0.0;   // |eta^2 g3|, g3 = g'' g^2 / 12 + g'^2 g / 3
};

/// Leading terms of the modified vector field of x' = x + eta g(x) in 1D.
inline ModifiedEqTerms modified_eq_terms(const MultiscaleObjective& obj, double x, double eta) {
  if (obj.dimension() != 1) throw UnsupportedError("modified_eq_terms is one-dimensional");
  if (!obj.macro().has_third_derivative() || (obj.micro() && !obj.micro()->has_third_derivative()))
    throw UnsupportedError(obj.id() + ": third derivatives unavailable");
  const Vec v{x};
  const double g = -obj.gradient(v)[0];
  const double g1 = -obj.hessian(v)(0, 0);
  const double g2d = -obj.third_derivative(x);
  const double g2 = -0.5 * g1 * g;
  const double g3 = g2d * g * g / 12.0 + g1 * g1 * g / 3.0;
  return {std::fabs(g), std::fabs(eta * g2), std::fabs(eta * eta * g3)};
}

}  // namespace gdchaos
