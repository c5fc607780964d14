#pragma once

// Empirical distributions, distances between samples and densities, the
// rescaled Gibbs density exp(-2 f0 / (eta sigma^2)) / Z with a sampler, and
// Monte Carlo estimators built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gdchaos/errors.hpp"
#include "gdchaos/linalg.hpp"
#include "gdchaos/objective.hpp"
#include "gdchaos/parallel.hpp"
#include "gdchaos/rng.hpp"

namespace gdchaos {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// ---------------------------------------------------------------- histograms

/// Binned sample counts in one or two dimensions. Samples outside the range
/// land in the overflow tally and are excluded from the density.
class EmpiricalDistribution {
 public:
  std::size_t dimension() const { return edges_.size(); }
  std::size_t bins(std::size_t axis = 0) const { return edges_[axis].size() - 1; }
  const std::vector<double>& edges(std::size_t axis = 0) const { return edges_[axis]; }
  double bin_width(std::size_t axis, std::size_t i) const {
    return edges_[axis][i + 1] - edges_[axis][i];
  }
  double count(std::size_t i) const { return counts_[i]; }
  double count(std::size_t i, std::size_t j) const { return counts_[i * bins(1) + j]; }
  const std::vector<double>& counts() const { return counts_; }
  /// Weight that fell inside the range.
  double total_weight() const { return total_; }
  std::uint64_t overflow() const { return overflow_; }
  const std::vector<double>& samples() const { return samples_; }

  double density(std::size_t i) const { return counts_[i] / (total_ * bin_width(0, i)); }
  double density(std::size_t i, std::size_t j) const {
    return count(i, j) / (total_ * bin_width(0, i) * bin_width(1, j));
  }

  /// Empirical CDF of the binned law (uniform within bins); 1D only.
  double cdf(double x) const {
    require_1d();
    const auto& e = edges_[0];
    if (x <= e.front()) return 0.0;
    if (x >= e.back()) return 1.0;
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x) - e.begin()) - 1;
    const double frac = (x - e[i]) / (e[i + 1] - e[i]);
    return (cumulative_[i] + frac * counts_[i]) / total_;
  }

  double quantile(double u) const {
    require_1d();
    const auto& e = edges_[0];
    const double target = std::clamp(u, 0.0, 1.0) * total_;
    const std::size_t i = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), target) -
                                 cumulative_.begin()) - 1,
        bins() - 1);
    if (counts_[i] <= 0.0) return e[i];
    const double frac = std::clamp((target - cumulative_[i]) / counts_[i], 0.0, 1.0);
    return e[i] + frac * (e[i + 1] - e[i]);
  }

  /// CSV "bin_left,bin_right,density" (1D) or
  /// "x_left,x_right,y_left,y_right,density" (2D).
  void write_csv(std::ostream& os) const {
    os.precision(17);
    if (dimension() == 1) {
      os << "bin_left,bin_right,density\n";
      for (std::size_t i = 0; i < bins(); ++i)
        os << edges_[0][i] << ',' << edges_[0][i + 1] << ',' << density(i) << '\n';
      return;
    }
    os << "x_left,x_right,y_left,y_right,density\n";
    for (std::size_t i = 0; i < bins(0); ++i)
      for (std::size_t j = 0; j < bins(1); ++j)
        os << edges_[0][i] << ',' << edges_[0][i + 1] << ',' << edges_[1][j] << ','
           << edges_[1][j + 1] << ',' << density(i, j) << '\n';
  }

 private:
  friend EmpiricalDistribution make_histogram(std::span<const double>, std::size_t, Range, bool);
  friend EmpiricalDistribution make_histogram_2d(std::span<const double>, std::size_t,
                                                 std::size_t, Range, Range);

  void require_1d() const {
    if (dimension() != 1) throw DomainError("histogram query requires one dimension");
  }

  static std::vector<double> make_edges(std::size_t bins, Range r) {
    if (bins < 2) throw DomainError("histogram needs at least 2 bins");
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi))
      throw DomainError("histogram range must be finite with lo < hi");
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
      e[i] = r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(bins);
    e.back() = r.hi;
    return e;
  }

  /// Bin of x, or -1 outside [lo, hi]; hi belongs to the last bin.
  static std::ptrdiff_t locate(const std::vector<double>& e, double x) {
    if (!(x >= e.front() && x <= e.back())) return -1;
    if (x == e.back()) return static_cast<std::ptrdiff_t>(e.size()) - 2;
    const double span = e.back() - e.front();
    const std::size_t n = e.size() - 1;
    auto i = static_cast<std::size_t>((x - e.front()) / span * static_cast<double>(n));
    i = std::min(i, n - 1);
    while (i > 0 && x < e[i]) --i;
    while (i + 1 < n && x >= e[i + 1]) ++i;
    return static_cast<std::ptrdiff_t>(i);
  }

  std::vector<std::vector<double>> edges_;
  std::vector<double> counts_;
  std::vector<double> cumulative_;
  std::vector<double> samples_;
  double total_ = 0.0;
  std::uint64_t overflow_ = 0;
};

inline EmpiricalDistribution make_histogram(std::span<const double> samples, std::size_t bins,
                                            Range range, bool retain_samples = false) {
  if (samples.empty()) throw DomainError("histogram of an empty sample set");
  EmpiricalDistribution h;
  h.edges_ = {EmpiricalDistribution::make_edges(bins, range)};
  h.counts_.assign(bins, 0.0);
  for (double x : samples) {
    const auto i = EmpiricalDistribution::locate(h.edges_[0], x);
    if (i < 0) {
      ++h.overflow_;
      continue;
    }
    h.counts_[static_cast<std::size_t>(i)] += 1.0;
    h.total_ += 1.0;
  }
  if (h.total_ == 0.0) throw DomainError("histogram: every sample fell outside the range");
  h.cumulative_.assign(bins + 1, 0.0);
  for (std::size_t i = 0; i < bins; ++i) h.cumulative_[i + 1] = h.cumulative_[i] + h.counts_[i];
  if (retain_samples) h.samples_.assign(samples.begin(), samples.end());
  return h;
}

/// Samples stored flat as (x, y) pairs.
inline EmpiricalDistribution make_histogram_2d(std::span<const double> xy, std::size_t bins_x,
                                               std::size_t bins_y, Range range_x, Range range_y) {
  if (xy.size() < 2) throw DomainError("histogram of an empty sample set");
  if (xy.size() % 2 != 0) throw DomainError("2D histogram needs (x, y) pairs");
  EmpiricalDistribution h;
  h.edges_ = {EmpiricalDistribution::make_edges(bins_x, range_x),
              EmpiricalDistribution::make_edges(bins_y, range_y)};
  h.counts_.assign(bins_x * bins_y, 0.0);
  for (std::size_t k = 0; k < xy.size(); k += 2) {
    const auto i = EmpiricalDistribution::locate(h.edges_[0], xy[k]);
    const auto j = EmpiricalDistribution::locate(h.edges_[1], xy[k + 1]);
    if (i < 0 || j < 0) {
      ++h.overflow_;
      continue;
    }
    h.counts_[static_cast<std::size_t>(i) * bins_y + static_cast<std::size_t>(j)] += 1.0;
    h.total_ += 1.0;
  }
  if (h.total_ == 0.0) throw DomainError("histogram: every sample fell outside the range");
  return h;
}

// ---------------------------------------------------------------- normal law

inline double normal_cdf(double x, double mean = 0.0, double variance = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

// ---------------------------------------------------------------- grid laws

/// Law on [lo, lo + n h] whose density is the linear interpolant of
/// nonnegative node weights. CDF is piecewise quadratic and inverted exactly.
class PiecewiseLinearLaw {
 public:
  PiecewiseLinearLaw() = default;
  PiecewiseLinearLaw(double lo, double h, std::vector<double> weights)
      : lo_(lo), h_(h), w_(std::move(weights)), cum_(w_.size(), 0.0) {
    for (std::size_t i = 0; i + 1 < w_.size(); ++i)
      cum_[i + 1] = cum_[i] + 0.5 * h_ * (w_[i] + w_[i + 1]);
    total_ = cum_.back();
    if (!(total_ > 0.0)) throw DomainError("grid law has zero mass");
  }

  double total() const { return total_; }
  double lo() const { return lo_; }
  double hi() const { return lo_ + h_ * static_cast<double>(w_.size() - 1); }
  double node_weight(std::size_t i) const { return w_[i]; }

  double pdf(double x) const {
    if (x < lo() || x > hi()) return 0.0;
    const auto [i, t] = cell(x);
    return ((1.0 - t) * w_[i] + t * w_[i + 1]) / total_;
  }

  double cdf(double x) const {
    if (x <= lo()) return 0.0;
    if (x >= hi()) return 1.0;
    const auto [i, t] = cell(x);
    const double part = h_ * (w_[i] * t + 0.5 * (w_[i + 1] - w_[i]) * t * t);
    return std::min(1.0, (cum_[i] + part) / total_);
  }

  double quantile(double u) const {
    const double target = std::clamp(u, 0.0, 1.0) * total_;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin());
    i = std::clamp<std::size_t>(i, 1, cum_.size() - 1) - 1;
    const double d = target - cum_[i];
    const double a = 0.5 * h_ * (w_[i + 1] - w_[i]);
    const double b = h_ * w_[i];
    const double disc = std::max(0.0, b * b + 4.0 * a * d);
    const double denom = b + std::sqrt(disc);
    const double t = denom > 0.0 ? std::clamp(2.0 * d / denom, 0.0, 1.0) : 0.5;
    return lo_ + h_ * (static_cast<double>(i) + t);
  }

  /// W1 to the empirical law of sorted samples as the integral of |F_n - F|.
  /// F is quadratic between merged breakpoints, so Simpson is exact there.
  double w1_to_sorted(const std::vector<double>& s) const {
    if (s.empty()) throw DomainError("Wasserstein distance of an empty sample set");
    const double n = static_cast<double>(s.size());
    auto simpson = [this](double a, double b, double c) {
      return std::fabs((b - a) / 6.0 * (6.0 * c - cdf(a) - 4.0 * cdf(0.5 * (a + b)) - cdf(b)));
    };
    auto piece = [&](double a, double b, double c) {
      if (cdf(a) < c && c < cdf(b)) {
        const double m = std::clamp(quantile(c), a, b);
        return simpson(a, m, c) + simpson(m, b, c);
      }
      return simpson(a, b, c);
    };
    double x = std::min(lo(), s.front());
    const double end = std::max(hi(), s.back());
    std::size_t k = 0, i = 0;
    double acc = 0.0;
    while (k < s.size() && s[k] <= x) ++k;
    while (x < end) {
      while (i < w_.size() && lo_ + h_ * static_cast<double>(i) <= x) ++i;
      double y = end;
      if (k < s.size()) y = std::min(y, s[k]);
      if (i < w_.size()) y = std::min(y, lo_ + h_ * static_cast<double>(i));
      acc += piece(x, y, static_cast<double>(k) / n);
      x = y;
      while (k < s.size() && s[k] <= x) ++k;
    }
    return acc;
  }

 private:
  std::pair<std::size_t, double> cell(double x) const {
    const double s = (x - lo_) / h_;
    std::size_t i = std::min(static_cast<std::size_t>(s), w_.size() - 2);
    return {i, s - static_cast<double>(i)};
  }

  double lo_ = 0.0;
  double h_ = 1.0;
  std::vector<double> w_;
  std::vector<double> cum_;
  double total_ = 0.0;
};

// ---------------------------------------------------------------- Gibbs

struct GibbsSettings {
  /// Grid intervals per axis (even); 0 picks 2^14 in 1D and 2^10 in 2D.
  std::size_t intervals = 0;
  /// Boundary density relative to the interior maximum.
  double tail_ratio = 1e-16;
  double max_radius = 1e6;
};

/// Rescaled Gibbs density exp(-2 f0(x) / (eta sigma^2)) / Z on the box
/// [-R, R]^d, tabulated on a uniform lattice.
class GibbsDensity {
 public:
  GibbsDensity(MacroFunction f0, double eta, double sigma2, GibbsSettings settings = {})
      : f0_(std::move(f0)), eta_(eta), sigma2_(sigma2), dim_(f0_.dimension()) {
    if (!(eta > 0.0) || !(sigma2 > 0.0)) throw DomainError("Gibbs density needs eta, sigma2 > 0");
    if (dim_ > 2) throw UnsupportedError("Gibbs density supports d <= 2");
    n_ = settings.intervals ? settings.intervals : (dim_ == 1 ? (1u << 14) : (1u << 10));
    if (n_ < 4 || n_ % 4 != 0) throw DomainError("Gibbs grid intervals must be a multiple of 4");
    beta_ = 2.0 / (eta_ * sigma2_);
    find_minimum();
    find_radius(settings);
    tabulate();
  }

  const MacroFunction& f0() const { return f0_; }
  double eta() const { return eta_; }
  double sigma2() const { return sigma2_; }
  std::size_t dimension() const { return dim_; }
  double radius() const { return radius_; }
  std::size_t intervals() const { return n_; }
  double step() const { return h_; }
  double node(std::size_t i) const { return -radius_ + h_ * static_cast<double>(i); }
  /// Normalisation Z of exp(-2 f0 / (eta sigma^2)).
  double z() const { return std::exp(log_z_); }
  double log_z() const { return log_z_; }
  /// Estimated relative error of Z (Simpson at h against 2h, divided by 15).
  double z_relative_error() const { return z_error_; }
  /// Upper estimate of the mass outside the box.
  double tail_bound() const { return tail_bound_; }
  /// Simpson integral of the normalised tabulated density (1 up to rounding).
  double lattice_mass() const { return lattice_mass_; }

  double pdf(const Vec& x) const {
    for (std::size_t k = 0; k < dim_; ++k)
      if (std::fabs(x[k]) > radius_) return 0.0;
    return std::exp(-beta_ * (f0_.value(x) - fmin_) - log_zs_);
  }

  /// Marginal law of one coordinate (the full law in 1D).
  const PiecewiseLinearLaw& marginal(std::size_t axis = 0) const { return marginals_[axis]; }
  double cdf(double x) const { return marginals_[0].cdf(x); }
  double quantile(double u) const { return marginals_[0].quantile(u); }

  Vec sample(CounterRng& rng) const {
    if (dim_ == 1) return Vec{marginals_[0].quantile(rng.uniform())};
    const double x = marginals_[0].quantile(rng.uniform());
    const double s = (x + radius_) / h_;
    const std::size_t i = std::min(static_cast<std::size_t>(s), n_ - 1);
    const double t = s - static_cast<double>(i);
    const double wl = (1.0 - t) * columns_[i].total();
    const double wr = t * columns_[i + 1].total();
    const std::size_t col = rng.uniform() * (wl + wr) < wl ? i : i + 1;
    return Vec{x, columns_[col].quantile(rng.uniform())};
  }

  /// Simpson quadrature of fn against the density.
  double expectation(const std::function<double(const Vec&)>& fn) const {
    double s = 0.0;
    if (dim_ == 1) {
      for (std::size_t i = 0; i <= n_; ++i) s += simpson_weight(i) * lattice_[i] * fn(Vec{node(i)});
      return s * h_ / 3.0;
    }
    for (std::size_t i = 0; i <= n_; ++i)
      for (std::size_t j = 0; j <= n_; ++j)
        s += simpson_weight(i) * simpson_weight(j) * lattice_[i * (n_ + 1) + j] *
             fn(Vec{node(i), node(j)});
    return s * h_ * h_ / 9.0;
  }

  /// Lattice dump: "x,density" or "x,y,density", every `stride`-th node.
  void write_csv(std::ostream& os, std::size_t stride = 1) const {
    os.precision(17);
    stride = std::max<std::size_t>(stride, 1);
    if (dim_ == 1) {
      os << "x,density\n";
      for (std::size_t i = 0; i <= n_; i += stride) os << node(i) << ',' << lattice_[i] << '\n';
      return;
    }
    os << "x,y,density\n";
    for (std::size_t i = 0; i <= n_; i += stride)
      for (std::size_t j = 0; j <= n_; j += stride)
        os << node(i) << ',' << node(j) << ',' << lattice_[i * (n_ + 1) + j] << '\n';
  }

 private:
  double weight(const Vec& x) const { return std::exp(-beta_ * (f0_.value(x) - fmin_)); }

  double simpson_weight(std::size_t i) const {
    if (i == 0 || i == n_) return 1.0;
    return i % 2 ? 4.0 : 2.0;
  }

  void find_minimum() {
    fmin_ = INFINITY;
    for (const Vec& m : f0_.minimizers()) fmin_ = std::fmin(fmin_, f0_.value(m));
    extent_ = 0.0;
    for (const Vec& m : f0_.minimizers()) extent_ = std::fmax(extent_, m.max_abs());
    if (f0_.minimizers().empty()) {
      // Coarse scan of [-1, 1]^d; the box never shrinks below radius 1 here.
      extent_ = 1.0;
      const int m = dim_ == 1 ? 2001 : 201;
      for (int i = 0; i < m; ++i) {
        const double a = -1.0 + 2.0 * i / (m - 1);
        if (dim_ == 1) {
          fmin_ = std::fmin(fmin_, f0_.value(Vec{a}));
          continue;
        }
        for (int j = 0; j < m; ++j) fmin_ = std::fmin(fmin_, f0_.value(Vec{a, -1.0 + 2.0 * j / (m - 1)}));
      }
    }
  }

  /// Largest relative density on the boundary of [-R, R]^d.
  double boundary_ratio(double r) const {
    if (dim_ == 1) return std::fmax(weight(Vec{r}), weight(Vec{-r}));
    constexpr int kPerSide = 512;
    double worst = 0.0;
    for (int i = 0; i <= kPerSide; ++i) {
      const double a = -r + 2.0 * r * i / kPerSide;
      worst = std::fmax(worst, std::fmax(weight(Vec{a, r}), weight(Vec{a, -r})));
      worst = std::fmax(worst, std::fmax(weight(Vec{r, a}), weight(Vec{-r, a})));
    }
    return worst;
  }

  /// Doubling search from R = 1, then bisection to the smallest passing
  /// radius that still contains every known minimizer.
  void find_radius(const GibbsSettings& s) {
    auto passes = [&](double r) { return r >= extent_ && boundary_ratio(r) < s.tail_ratio; };
    double hi = 1.0;
    while (!passes(hi)) {
      hi *= 2.0;
      if (hi > s.max_radius) throw UnsupportedError("Gibbs density: no finite truncation radius for " + f0_.id());
    }
    double lo = hi / 2.0;
    while (lo > 1e-9 && passes(lo)) {
      hi = lo;
      lo /= 2.0;
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (passes(mid) ? hi : lo) = mid;
    }
    radius_ = hi;
    tail_bound_ = boundary_ratio(radius_);
  }

  void tabulate() {
    h_ = 2.0 * radius_ / static_cast<double>(n_);
    const std::size_t m = n_ + 1;
    std::vector<double> w(dim_ == 1 ? m : m * m);
    if (dim_ == 1) {
      for (std::size_t i = 0; i < m; ++i) w[i] = weight(Vec{node(i)});
    } else {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) w[i * m + j] = weight(Vec{node(i), node(j)});
    }
    // Simpson at h and at 2h for the error estimate.
    auto simpson = [&](std::size_t stride) {
      const std::size_t n = n_ / stride;
      auto sw = [n](std::size_t i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
      const double hh = h_ * static_cast<double>(stride);
      double s = 0.0;
      if (dim_ == 1) {
        for (std::size_t i = 0; i <= n; ++i) s += sw(i) * w[i * stride];
        return s * hh / 3.0;
      }
      for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= n; ++j) s += sw(i) * sw(j) * w[i * stride * m + j * stride];
      return s * hh * hh / 9.0;
    };
    const double zs = simpson(1);
    const double zs2 = simpson(2);
    z_error_ = std::fabs(zs - zs2) / 15.0 / zs;
    log_zs_ = std::log(zs);
    log_z_ = log_zs_ - beta_ * fmin_;
    lattice_.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) lattice_[i] = w[i] / zs;
    lattice_mass_ = simpson(1) / zs;

    if (dim_ == 1) {
      marginals_ = {PiecewiseLinearLaw(-radius_, h_, lattice_)};
      return;
    }
    std::vector<double> mx(m), my(m, 0.0);
    columns_.clear();
    columns_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> col(lattice_.begin() + static_cast<std::ptrdiff_t>(i * m),
                              lattice_.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
      double t = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        t += (j == 0 || j == n_ ? 0.5 : 1.0) * col[j];
        my[j] += (i == 0 || i == n_ ? 0.5 : 1.0) * col[j] * h_;
      }
      mx[i] = t * h_;
      // Columns far in the tail can underflow to zero mass; keep them usable.
      if (!(t > 0.0)) std::fill(col.begin(), col.end(), 1e-300);
      columns_.emplace_back(-radius_, h_, std::move(col));
    }
    marginals_ = {PiecewiseLinearLaw(-radius_, h_, mx), PiecewiseLinearLaw(-radius_, h_, my)};
  }

  MacroFunction f0_;
  double eta_;
  double sigma2_;
  std::size_t dim_;
  std::size_t n_ = 0;
  double beta_ = 0.0;
  double fmin_ = 0.0;
  double extent_ = 0.0;
  double radius_ = 1.0;
  double h_ = 0.0;
  double log_zs_ = 0.0;
  double log_z_ = 0.0;
  double z_error_ = 0.0;
  double tail_bound_ = 0.0;
  double lattice_mass_ = 0.0;
  std::vector<double> lattice_;
  std::vector<PiecewiseLinearLaw> marginals_;
  std::vector<PiecewiseLinearLaw> columns_;
};

inline GibbsDensity gibbs_density(const MacroFunction& f0, double eta, double sigma2,
                                  std::size_t resolution = 0) {
  GibbsSettings s;
  s.intervals = resolution;
  return GibbsDensity(f0, eta, sigma2, s);
}

/// n draws stored flat (n * d values); draw i uses stream i / 4096 so that
/// the result does not depend on the worker count.
inline std::vector<double> gibbs_sample(const GibbsDensity& g, std::size_t n, std::uint64_t seed,
                                        unsigned workers = 1) {
  constexpr std::size_t kChunk = 4096;
  const std::size_t d = g.dimension();
  std::vector<double> out(n * d);
  parallel_chunks((n + kChunk - 1) / kChunk, workers, [&](std::size_t c) {
    CounterRng rng(seed, static_cast<std::uint32_t>(c), 0x61BB5ull << 32);
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      const Vec v = g.sample(rng);
      for (std::size_t k = 0; k < d; ++k) out[i * d + k] = v[k];
    }
  });
  return out;
}

// ---------------------------------------------------------------- distances

/// p-Wasserstein distance between two 1D empirical laws, computed exactly by
/// integrating |Qa(u) - Qb(u)|^p over the merged quantile breakpoints.
inline double wasserstein_1d(std::vector<double> a, std::vector<double> b, double p = 1.0) {
  if (a.empty() || b.empty()) throw DomainError("Wasserstein distance of an empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, acc = 0.0;
  if (a.size() == b.size()) {
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::pow(std::fabs(a[k] - b[k]), p);
    return std::pow(acc / na, 1.0 / p);
  }
  while (i < a.size() && j < b.size()) {
    const double ua = static_cast<double>(i + 1) / na, ub = static_cast<double>(j + 1) / nb;
    const double next = std::fmin(ua, ub);
    acc += (next - u) * std::pow(std::fabs(a[i] - b[j]), p);
    u = next;
    if (ua <= next) ++i;
    if (ub <= next) ++j;
  }
  return std::pow(acc, 1.0 / p);
}

inline double w1_distance_1d(std::vector<double> a, std::vector<double> b) {
  return wasserstein_1d(std::move(a), std::move(b), 1.0);
}

inline double w2_distance_1d(std::vector<double> a, std::vector<double> b) {
  return wasserstein_1d(std::move(a), std::move(b), 2.0);
}

/// p-Wasserstein distance between samples and a law given by its quantile
/// function: Gauss-Legendre quadrature of |x_(i) - Q(u)|^p on each
/// [i/n, (i+1)/n].
inline double wasserstein_to_law(std::vector<double> samples,
                                 const std::function<double(double)>& quantile, double p = 1.0) {
  if (samples.empty()) throw DomainError("Wasserstein distance of an empty sample set");
  std::sort(samples.begin(), samples.end());
  static constexpr double kNodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                       0.8611363115940526};
  static constexpr double kWeights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                         0.3478548451374538};
  const double n = static_cast<double>(samples.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double a = static_cast<double>(i) / n, half = 0.5 / n;
    double cell = 0.0;
    for (int q = 0; q < 4; ++q)
      cell += kWeights[q] * std::pow(std::fabs(samples[i] - quantile(a + half * (1.0 + kNodes[q]))), p);
    acc += cell * half;
  }
  return std::pow(acc, 1.0 / p);
}

inline double w1_distance_1d(std::vector<double> samples, const GibbsDensity& g) {
  if (g.dimension() != 1) throw DomainError("w1_distance_1d needs a 1D density");
  std::sort(samples.begin(), samples.end());
  return g.marginal().w1_to_sorted(samples);
}

/// Mean 1D W1 over random unit directions; a and b hold (x, y) pairs.
inline double sliced_w1(std::span<const double> a, std::span<const double> b, std::size_t slices,
                        std::uint64_t seed) {
  if (slices < 16) throw DomainError("sliced_w1 needs at least 16 slices");
  if (a.size() % 2 || b.size() % 2 || a.empty() || b.empty())
    throw DomainError("sliced_w1 needs nonempty (x, y) pair arrays");
  CounterRng rng(seed, 0x511CEu);
  double acc = 0.0;
  std::vector<double> pa(a.size() / 2), pb(b.size() / 2);
  for (std::size_t s = 0; s < slices; ++s) {
    const double th = std::numbers::pi * rng.uniform();
    const double c = std::cos(th), si = std::sin(th);
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = c * a[2 * i] + si * a[2 * i + 1];
    for (std::size_t i = 0; i < pb.size(); ++i) pb[i] = c * b[2 * i] + si * b[2 * i + 1];
    acc += w1_distance_1d(pa, pb);
  }
  return acc / static_cast<double>(slices);
}

/// sup |F_n - F| over the sample points (both one-sided gaps).
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw DomainError("KS distance of an empty sample set");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::fmax(d, std::fmax(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

// ---------------------------------------------------------------- estimators

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  bool inconclusive = false;
};

/// Compactly supported C^2 test functions: the radial bump
/// (1 - |x - c|^2 / r^2)^3 on the ball of radius r, or a constant.
class TestFunction {
 public:
  static TestFunction bump(Vec center, double radius) {
    if (!(radius > 0.0)) throw DomainError("bump radius must be positive");
    TestFunction t;
    t.center_ = center;
    t.radius_ = radius;
    return t;
  }
  static TestFunction constant(double level) {
    TestFunction t;
    t.constant_ = true;
    t.level_ = level;
    return t;
  }

  bool is_constant() const { return constant_; }
  double radius() const { return radius_; }
  const Vec& center() const { return center_; }

  double operator()(const Vec& x) const {
    if (constant_) return level_;
    const Vec d = x - center_;
    const double s = 1.0 - d.dot(d) / (radius_ * radius_);
    return s > 0.0 ? s * s * s : 0.0;
  }

 private:
  Vec center_;
  double radius_ = 1.0;
  bool constant_ = false;
  double level_ = 0.0;
};

namespace detail {

inline constexpr std::size_t kMcChunk = std::size_t{1} << 16;

/// Sums fn(rng) over n draws in fixed chunks, chunk c reading stream c.
template <class Fn>
McEstimate chunked_mean(std::uint64_t n, std::uint64_t seed, unsigned workers, Fn&& fn) {
  if (n < 2) throw DomainError("Monte Carlo needs at least 2 samples");
  const std::size_t chunks = static_cast<std::size_t>((n + kMcChunk - 1) / kMcChunk);
  std::vector<double> sums(chunks, 0.0), squares(chunks, 0.0);
  parallel_chunks(chunks, workers, [&](std::size_t c) {
    CounterRng rng(seed, static_cast<std::uint32_t>(c), 0x3C3Cull << 32);
    const std::uint64_t lo = c * kMcChunk, hi = std::min<std::uint64_t>(n, lo + kMcChunk);
    double s = 0.0, q = 0.0;
    for (std::uint64_t i = lo; i < hi; ++i) {
      const double v = fn(rng);
      s += v;
      q += v * v;
    }
    sums[c] = s;
    squares[c] = q;
  });
  double s = 0.0, q = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sums[c];
    q += squares[c];
  }
  const double nn = static_cast<double>(n);
  McEstimate r;
  r.samples = n;
  r.estimate = s / nn;
  const double var = std::fmax(0.0, (q - s * s / nn) / (nn - 1.0));
  r.std_error = std::sqrt(var / nn);
  return r;
}

}  // namespace detail

/// E h(phi_hat(X0)) - E h(X0) with X0 drawn by `sampler`, paired (one X0
/// feeds both terms) and antithetic in zeta when the noise law is symmetric.
/// Flagged inconclusive when the standard error exceeds both |estimate| / 3
/// and the requested precision.
inline McEstimate invariance_residual(const MacroFunction& f0, const NoiseModel& noise, double eta,
                                      const TestFunction& h,
                                      const std::function<Vec(CounterRng&)>& sampler,
                                      std::uint64_t n_mc, std::uint64_t seed, unsigned workers = 1,
                                      double precision = 0.0) {
  if (!(eta > 0.0)) throw DomainError("learning rate must be positive");
  if (!noise.isotropic()) throw DomainError("invariance residual needs isotropic noise");
  McEstimate r;
  if (h.is_constant()) {
    r.samples = n_mc;
    return r;
  }
  const bool antithetic = noise.symmetric();
  r = detail::chunked_mean(n_mc, seed, workers, [&](CounterRng& rng) {
    const Vec x = sampler(rng);
    const Vec z = noise.sample(rng);
    const Vec drift = x - eta * f0.gradient(x);
    const double hx = h(x);
    if (!antithetic) return h(drift + eta * z) - hx;
    return 0.5 * (h(drift + eta * z) + h(drift - eta * z)) - hx;
  });
  r.inconclusive = r.std_error > std::fabs(r.estimate) / 3.0 && r.std_error > precision;
  return r;
}

inline McEstimate invariance_residual(const GibbsDensity& g, const NoiseModel& noise,
                                      const TestFunction& h, std::uint64_t n_mc, std::uint64_t seed,
                                      unsigned workers = 1, double precision = 0.0) {
  if (std::fabs(noise.sigma2() - g.sigma2()) > 1e-12 * g.sigma2())
    throw DomainError("noise variance does not match the Gibbs density");
  return invariance_residual(
      g.f0(), noise, g.eta(), h, [&g](CounterRng& rng) { return g.sample(rng); }, n_mc, seed,
      workers, precision);
}

/// Monte Carlo E |grad f0(X0)|^2 over Gibbs samples.
inline McEstimate grad_second_moment(const GibbsDensity& g, std::uint64_t n, std::uint64_t seed,
                                     unsigned workers = 1) {
  return detail::chunked_mean(n, seed, workers, [&g](CounterRng& rng) {
    const Vec grad = g.f0().gradient(g.sample(rng));
    return grad.dot(grad);
  });
}

inline McEstimate grad_second_moment(const MacroFunction& f0, double eta, double sigma2,
                                     std::uint64_t n, std::uint64_t seed, unsigned workers = 1) {
  if (!f0.growth()) throw UnsupportedError(f0.id() + ": growth exponents unknown");
  return grad_second_moment(GibbsDensity(f0, eta, sigma2), n, seed, workers);
}

/// Local Gaussian law at a nondegenerate minimizer:
/// covariance eta sigma^2 (2 Hess f0(x*))^{-1}.
struct GaussianApprox {
  Vec center;
  Mat covariance;
  Mat precision;
  int order = 2;

  double pdf(const Vec& x) const {
    const Vec d = x - center;
    const double q = d.dot(precision * d);
    const double norm = std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(center.dim())) *
                        std::sqrt(covariance.det());
    return std::exp(-0.5 * q) / norm;
  }
  /// CDF of coordinate `axis`.
  double cdf(double t, std::size_t axis = 0) const {
    return normal_cdf(t, center[axis], covariance(axis, axis));
  }
};

inline GaussianApprox gaussian_approx(const MacroFunction& f0, double eta, double sigma2,
                                      const Vec& minimizer) {
  const Mat hess = f0.hessian(minimizer);
  const auto ev = hess.symmetric_eigenvalues();
  const double asym = hess.dim() == 2 ? std::fabs(hess(0, 1) - hess(1, 0)) : 0.0;
  if (!(ev[0] > 1e-12 * std::fmax(1.0, std::fabs(ev[1]))) || asym > 1e-12)
    throw UnsupportedError(f0.id() + ": Hessian at the minimizer is not positive definite");
  GaussianApprox g;
  g.center = minimizer;
  g.covariance = (0.5 * eta * sigma2) * hess.inverse();
  g.precision = (2.0 / (eta * sigma2)) * hess;
  return g;
}

// ---------------------------------------------------------------- fits

/// Least-squares slope of log|y| against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::fabs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace gdchaos
