#pragma once

// Gradient-descent maps on multiscale objectives: plain GD, the bounded-noise
// stochastic surrogate, heavy ball and NAG-SC, plus orbit and ensemble drivers.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gdchaos/errors.hpp"
#include "gdchaos/objective.hpp"
#include "gdchaos/parallel.hpp"
#include "gdchaos/rng.hpp"

namespace gdchaos {

enum class MapKind { gd, stochastic_gd, heavy_ball, nag_sc };

inline std::string_view to_string(MapKind k) {
  switch (k) {
    case MapKind::gd:
      return "gd";
    case MapKind::stochastic_gd:
      return "stochastic-gd";
    case MapKind::heavy_ball:
      return "heavy-ball";
    case MapKind::nag_sc:
      return "nag-sc";
  }
  return "?";
}

inline MapKind parse_map_kind(std::string_view s) {
  if (s == "gd") return MapKind::gd;
  if (s == "stochastic-gd") return MapKind::stochastic_gd;
  if (s == "heavy-ball") return MapKind::heavy_ball;
  if (s == "nag-sc") return MapKind::nag_sc;
  throw CatalogError("unknown map kind '" + std::string(s) + "'");
}

/// Map state: position plus the auxiliary variable of momentum methods
/// (velocity for heavy ball, the y sequence for NAG-SC).
struct State {
  Vec x;
  Vec aux;
};

/// Complete description of one map. The stochastic kind uses the macro part
/// of the objective and the noise model; the others use the full objective.
class MapSpec {
 public:
  static MapSpec gd(MultiscaleObjective obj, double eta) {
    return MapSpec(MapKind::gd, std::move(obj), std::nullopt, eta);
  }
  static MapSpec stochastic(MacroFunction f0, NoiseModel noise, double eta) {
    if (noise.dimension() != f0.dimension()) throw CatalogError("noise and macro dimensions differ");
    return MapSpec(MapKind::stochastic_gd, MultiscaleObjective(std::move(f0)), std::move(noise), eta);
  }
  /// Stochastic surrogate built from an objective whose micro-scale carries a noise model.
  static MapSpec stochastic_from(const MultiscaleObjective& obj, double eta) {
    if (!obj.micro() || !obj.micro()->noise())
      throw UnsupportedError("objective " + obj.id() + " has no noise model");
    return stochastic(obj.macro(), *obj.micro()->noise(), eta);
  }
  static MapSpec heavy_ball(MultiscaleObjective obj, double eta, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("heavy ball requires 0 <= gamma < 1");
    MapSpec m(MapKind::heavy_ball, std::move(obj), std::nullopt, eta);
    m.gamma_ = gamma;
    return m;
  }
  static MapSpec nag_sc(MultiscaleObjective obj, double eta, double mu_hint) {
    if (!(mu_hint > 0.0) || !(mu_hint * eta < 1.0))
      throw DomainError("NAG-SC requires mu > 0 and mu * eta < 1");
    MapSpec m(MapKind::nag_sc, std::move(obj), std::nullopt, eta);
    m.mu_hint_ = mu_hint;
    const double r = std::sqrt(mu_hint * eta);
    m.nag_c_ = (1.0 - r) / (1.0 + r);
    return m;
  }

  MapKind kind() const { return kind_; }
  const MultiscaleObjective& objective() const { return obj_; }
  const std::optional<NoiseModel>& noise() const { return noise_; }
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }
  double mu_hint() const { return mu_hint_; }
  /// NAG-SC extrapolation coefficient (1 - sqrt(mu eta)) / (1 + sqrt(mu eta)).
  double nag_c() const { return nag_c_; }
  std::size_t dimension() const { return obj_.dimension(); }
  bool is_stochastic() const { return kind_ == MapKind::stochastic_gd; }
  bool has_aux() const { return kind_ == MapKind::heavy_ball || kind_ == MapKind::nag_sc; }

  /// Initial state for a starting position: v0 = 0 for heavy ball, y0 = x0 for NAG-SC.
  State initial_state(const Vec& x0) const {
    if (kind_ == MapKind::nag_sc) return {x0, x0};
    return {x0, Vec(x0.dim())};
  }

 private:
  MapSpec(MapKind kind, MultiscaleObjective obj, std::optional<NoiseModel> noise, double eta)
      : kind_(kind), obj_(std::move(obj)), noise_(std::move(noise)), eta_(eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("learning rate must be positive");
  }

  MapKind kind_;
  MultiscaleObjective obj_;
  std::optional<NoiseModel> noise_;
  double eta_;
  double gamma_ = 0.0;
  double mu_hint_ = 0.0;
  double nag_c_ = 0.0;
};

// ---------------------------------------------------------------- steps

namespace detail {
inline void require_positive_eta(double eta) {
  if (!(eta > 0.0)) throw DomainError("learning rate must be positive");
}
inline void guard(const Vec& x, std::uint64_t iteration) {
  if (is_divergent(x)) throw DivergenceError(x, iteration);
}
}  // namespace detail

/// x - eta grad f(x).
inline Vec gd_step(const MultiscaleObjective& obj, double eta, const Vec& x) {
  detail::require_positive_eta(eta);
  Vec out = x - eta * obj.gradient(x);
  detail::guard(out, 1);
  return out;
}

/// x - eta grad f0(x) + eta zeta with a fresh draw of zeta.
inline Vec stochastic_step(const MacroFunction& f0, const NoiseModel& noise, double eta,
                           const Vec& x, CounterRng& rng) {
  detail::require_positive_eta(eta);
  Vec out = x - eta * f0.gradient(x) + eta * noise.sample(rng);
  detail::guard(out, 1);
  return out;
}

/// v' = gamma v - eta grad f(x), x' = x + v'.
inline State heavy_ball_step(const MultiscaleObjective& obj, double eta, double gamma,
                             const State& s) {
  detail::require_positive_eta(eta);
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("heavy ball requires 0 <= gamma < 1");
  State out;
  out.aux = gamma * s.aux - eta * obj.gradient(s.x);
  out.x = s.x + out.aux;
  detail::guard(out.x, 1);
  detail::guard(out.aux, 1);
  return out;
}

/// y' = x - eta grad f(x), x' = y' + c (y' - y) with c from the mu hint.
inline State nag_sc_step(const MultiscaleObjective& obj, double eta, double mu_hint,
                         const State& s) {
  detail::require_positive_eta(eta);
  if (!(mu_hint > 0.0) || !(mu_hint * eta < 1.0))
    throw DomainError("NAG-SC requires mu > 0 and mu * eta < 1");
  const double r = std::sqrt(mu_hint * eta);
  const double c = (1.0 - r) / (1.0 + r);
  State out;
  out.aux = s.x - eta * obj.gradient(s.x);
  out.x = out.aux + c * (out.aux - s.aux);
  detail::guard(out.x, 1);
  return out;
}

/// One application of the map. `step` is the global step index (before the
/// step) and `stream` selects the noise stream; both only matter for the
/// stochastic kind, whose draw is a pure function of (seed, stream, step).
inline void advance(const MapSpec& map, State& s, std::uint64_t seed, std::uint32_t stream,
                    std::uint64_t step) {
  const double eta = map.eta();
  const MultiscaleObjective& obj = map.objective();
  switch (map.kind()) {
    case MapKind::gd:
      s.x -= eta * obj.gradient(s.x);
      break;
    case MapKind::stochastic_gd: {
      CounterRng rng(seed, stream, step);
      s.x = s.x - eta * obj.macro().gradient(s.x) + eta * map.noise()->sample(rng);
      break;
    }
    case MapKind::heavy_ball:
      s.aux = map.gamma() * s.aux - eta * obj.gradient(s.x);
      s.x += s.aux;
      break;
    case MapKind::nag_sc: {
      const Vec y_next = s.x - eta * obj.gradient(s.x);
      s.x = y_next + map.nag_c() * (y_next - s.aux);
      s.aux = y_next;
      break;
    }
  }
  if (is_divergent(s.x) || (map.has_aux() && is_divergent(s.aux)))
    throw DivergenceError(s.x, step + 1);
}

// ---------------------------------------------------------------- orbits

/// Recorded states of one trajectory, stored flat (row i = state i).
struct Orbit {
  std::size_t dim = 1;
  std::vector<double> x;
  /// Auxiliary components for momentum maps; empty otherwise.
  std::vector<double> aux;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size() / dim; }
  Vec state(std::size_t i) const {
    Vec v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = x[i * dim + k];
    return v;
  }
  /// Iteration index of recorded state i.
  std::uint64_t iteration(std::size_t i) const { return burn_in + i * thin; }
  /// Coordinate `axis` of every recorded state.
  std::vector<double> coordinate(std::size_t axis) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i * dim + axis];
    return out;
  }
};

/// Discards burn_in iterates, then records the state at every thin-th of the
/// next n steps (the first recorded state is the one after burn-in).
inline Orbit iterate(const MapSpec& map, const State& start, std::uint64_t n, std::uint64_t burn_in,
                     std::uint64_t thin, std::uint64_t seed, std::uint32_t stream = 0) {
  if (thin < 1) throw DomainError("iterate: thin must be >= 1");
  if (start.x.dim() != map.dimension()) throw DomainError("iterate: start dimension mismatch");
  Orbit o;
  o.dim = map.dimension();
  o.burn_in = burn_in;
  o.thin = thin;
  o.seed = seed;
  const std::size_t records = static_cast<std::size_t>(n / thin + 1);
  o.x.reserve(records * o.dim);
  if (map.has_aux()) o.aux.reserve(records * o.dim);
  State s = start;
  std::uint64_t step = 0;
  for (; step < burn_in; ++step) advance(map, s, seed, stream, step);
  auto record = [&] {
    for (std::size_t k = 0; k < o.dim; ++k) o.x.push_back(s.x[k]);
    if (map.has_aux())
      for (std::size_t k = 0; k < o.dim; ++k) o.aux.push_back(s.aux[k]);
  };
  record();
  for (std::uint64_t i = 1; i <= n; ++i, ++step) {
    advance(map, s, seed, stream, step);
    if (i % thin == 0) record();
  }
  return o;
}

inline Orbit iterate(const MapSpec& map, const Vec& x0, std::uint64_t n, std::uint64_t burn_in = 0,
                     std::uint64_t thin = 1, std::uint64_t seed = 0) {
  return iterate(map, map.initial_state(x0), n, burn_in, thin, seed);
}

// ---------------------------------------------------------------- ensembles

/// A population of states evolved in lockstep. Member i draws its noise from
/// stream i, so results do not depend on the number of workers.
struct Ensemble {
  std::size_t dim = 1;
  std::vector<double> x;
  std::vector<double> aux;
  std::uint64_t generation = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size() / dim; }
  State member(std::size_t i) const {
    State s{Vec(dim), Vec(dim)};
    for (std::size_t k = 0; k < dim; ++k) {
      s.x[k] = x[i * dim + k];
      if (!aux.empty()) s.aux[k] = aux[i * dim + k];
    }
    return s;
  }
  void set_member(std::size_t i, const State& s) {
    for (std::size_t k = 0; k < dim; ++k) {
      x[i * dim + k] = s.x[k];
      if (!aux.empty()) aux[i * dim + k] = s.aux[k];
    }
  }
  std::vector<double> coordinate(std::size_t axis) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i * dim + axis];
    return out;
  }

  /// Ensemble from starting positions, with auxiliaries initialised per map.
  static Ensemble from_points(const MapSpec& map, const std::vector<Vec>& points) {
    Ensemble e;
    e.dim = map.dimension();
    e.x.resize(points.size() * e.dim);
    if (map.has_aux()) e.aux.resize(points.size() * e.dim);
    for (std::size_t i = 0; i < points.size(); ++i) e.set_member(i, map.initial_state(points[i]));
    return e;
  }
};

/// `count` points uniform on the box [lo, hi]^dim, drawn from stream `stream`.
inline std::vector<Vec> uniform_box(std::size_t count, std::size_t dim, double lo, double hi,
                                    std::uint64_t seed, std::uint32_t stream = 0) {
  std::vector<Vec> pts;
  pts.reserve(count);
  CounterRng rng(seed, stream, 0xB0C5ull << 32);
  for (std::size_t i = 0; i < count; ++i) {
    Vec v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = lo + (hi - lo) * rng.uniform();
    pts.push_back(v);
  }
  return pts;
}

/// Advances every member n steps. Step indices continue from init.generation.
inline Ensemble evolve_ensemble(const MapSpec& map, Ensemble init, std::uint64_t n,
                                std::uint64_t seed, unsigned workers = 1) {
  if (init.dim != map.dimension()) throw DomainError("evolve_ensemble: dimension mismatch");
  if (map.has_aux() && init.aux.size() != init.x.size())
    throw DomainError("evolve_ensemble: momentum map needs auxiliary state");
  init.seed = seed;
  const std::size_t members = init.size();
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (members + kChunk - 1) / kChunk;
  const std::uint64_t first_step = init.generation;
  parallel_chunks(chunks, workers, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(members, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      State s = init.member(i);
      try {
        for (std::uint64_t k = 0; k < n; ++k)
          advance(map, s, seed, static_cast<std::uint32_t>(i), first_step + k);
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.state(), e.iteration(), static_cast<std::int64_t>(i));
      }
      init.set_member(i, s);
    }
  });
  init.generation += n;
  return init;
}

}  // namespace gdchaos
