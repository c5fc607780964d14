#pragma once

// Multiscale objectives f = f0 + f1_eps: a macroscopic landscape plus an
// O(eps)-valued micro-scale whose gradient is O(1) and Hessian O(1/eps).

#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gdchaos/errors.hpp"
#include "gdchaos/linalg.hpp"
#include "gdchaos/rng.hpp"

namespace gdchaos {

// ---------------------------------------------------------------- macro scale

enum class MacroKind { quadratic, quartic, matyas, double_well, custom };

/// Growth exponents (k1, k2) with f0(x) - f0* >= C1 |x - x*|^k1 and
/// |grad f0(x)| <= C2 |x - x*|^k2.
struct GrowthExponents {
  double k1;
  double k2;
};

class MacroFunction {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  static MacroFunction quadratic() {
    MacroFunction f(MacroKind::quadratic, "quadratic", 1);
    f.smoothness_ = 1.0;
    f.strong_convexity_ = 1.0;
    f.growth_ = GrowthExponents{2.0, 1.0};
    f.minimizers_ = {Vec{0.0}};
    return f;
  }
  static MacroFunction quartic() {
    MacroFunction f(MacroKind::quartic, "quartic", 1);
    f.growth_ = GrowthExponents{4.0, 3.0};
    f.minimizers_ = {Vec{0.0}};
    return f;
  }
  /// 0.26 (x^2 + y^2) + 0.48 x y; Hessian eigenvalues 0.04 and 1.
  static MacroFunction matyas() {
    MacroFunction f(MacroKind::matyas, "matyas", 2);
    f.smoothness_ = 1.0;
    f.strong_convexity_ = 0.04;
    f.growth_ = GrowthExponents{2.0, 1.0};
    f.minimizers_ = {Vec{0.0, 0.0}};
    return f;
  }
  /// k (x^2 - 1)^2 with minimizers at +-1.
  static MacroFunction double_well(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw CatalogError("double-well: k must be positive");
    MacroFunction f(MacroKind::double_well, "double-well:k=" + format_param(k), 1);
    f.k_ = k;
    f.minimizers_ = {Vec{-1.0}, Vec{1.0}};
    return f;
  }
  /// User-supplied callables. Hessian may be empty.
  static MacroFunction custom(std::string id, std::size_t dim, ValueFn value, GradFn grad,
                              HessFn hess = {}) {
    MacroFunction f(MacroKind::custom, std::move(id), dim);
    f.custom_value_ = std::move(value);
    f.custom_grad_ = std::move(grad);
    f.custom_hess_ = std::move(hess);
    return f;
  }

  MacroKind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  std::size_t dimension() const { return dim_; }
  /// Double-well parameter k; zero for other kinds.
  double k() const { return k_; }
  std::optional<double> smoothness() const { return smoothness_; }
  std::optional<double> strong_convexity() const { return strong_convexity_; }
  std::optional<GrowthExponents> growth() const { return growth_; }
  /// Global minimizers (empty when unknown).
  const std::vector<Vec>& minimizers() const { return minimizers_; }
  bool has_hessian() const { return kind_ != MacroKind::custom || static_cast<bool>(custom_hess_); }
  bool has_third_derivative() const { return kind_ != MacroKind::custom && dim_ == 1; }

  MacroFunction& with_smoothness(double L) {
    smoothness_ = L;
    return *this;
  }
  MacroFunction& with_strong_convexity(double mu) {
    strong_convexity_ = mu;
    return *this;
  }
  MacroFunction& with_minimizers(std::vector<Vec> xs) {
    minimizers_ = std::move(xs);
    return *this;
  }

  double value(const Vec& x) const {
    switch (kind_) {
      case MacroKind::quadratic:
        return 0.5 * x[0] * x[0];
      case MacroKind::quartic: {
        const double x2 = x[0] * x[0];
        return 0.25 * x2 * x2;
      }
      case MacroKind::matyas:
        return 0.26 * (x[0] * x[0] + x[1] * x[1]) + 0.48 * x[0] * x[1];
      case MacroKind::double_well: {
        const double w = x[0] * x[0] - 1.0;
        return k_ * w * w;
      }
      case MacroKind::custom:
        return custom_value_(x);
    }
    return 0.0;
  }

  Vec gradient(const Vec& x) const {
    switch (kind_) {
      case MacroKind::quadratic:
        return Vec{x[0]};
      case MacroKind::quartic:
        return Vec{x[0] * x[0] * x[0]};
      case MacroKind::matyas:
        return Vec{0.52 * x[0] + 0.48 * x[1], 0.48 * x[0] + 0.52 * x[1]};
      case MacroKind::double_well:
        return Vec{4.0 * k_ * x[0] * (x[0] * x[0] - 1.0)};
      case MacroKind::custom:
        return custom_grad_(x);
    }
    return Vec(dim_);
  }

  Mat hessian(const Vec& x) const {
    switch (kind_) {
      case MacroKind::quadratic:
        return Mat::scalar(1.0);
      case MacroKind::quartic:
        return Mat::scalar(3.0 * x[0] * x[0]);
      case MacroKind::matyas:
        return Mat::from_rows(0.52, 0.48, 0.48, 0.52);
      case MacroKind::double_well:
        return Mat::scalar(4.0 * k_ * (3.0 * x[0] * x[0] - 1.0));
      case MacroKind::custom:
        if (!custom_hess_) throw UnsupportedError(id_ + ": no Hessian oracle");
        return custom_hess_(x);
    }
    return Mat(dim_);
  }

  /// f0''' in one dimension.
  double third_derivative(double x) const {
    switch (kind_) {
      case MacroKind::quadratic:
        return 0.0;
      case MacroKind::quartic:
        return 6.0 * x;
      case MacroKind::double_well:
        return 24.0 * k_ * x;
      default:
        throw UnsupportedError(id_ + ": no third-derivative oracle");
    }
  }

  static std::string format_param(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

 private:
  MacroFunction(MacroKind kind, std::string id, std::size_t dim)
      : kind_(kind), id_(std::move(id)), dim_(dim) {}

  MacroKind kind_;
  std::string id_;
  std::size_t dim_;
  double k_ = 0.0;
  std::optional<double> smoothness_;
  std::optional<double> strong_convexity_;
  std::optional<GrowthExponents> growth_;
  std::vector<Vec> minimizers_;
  ValueFn custom_value_;
  GradFn custom_grad_;
  HessFn custom_hess_;
};

// ---------------------------------------------------------------- noise model

enum class NoiseKind { neg_cos, quasi_sum, sincos2d, custom };

/// Bounded zero-mean random vector zeta. Draws consume a caller-supplied
/// generator; the model holds no mutable state.
class NoiseModel {
 public:
  using SampleFn = std::function<Vec(CounterRng&)>;

  /// zeta = -cos(U), U ~ Uniform[0, 2 pi).
  static NoiseModel neg_cos() {
    NoiseModel n(NoiseKind::neg_cos, 1, 1.0, 0.5);
    return n;
  }
  /// zeta = -(cos U1 + sqrt2 cos U2).
  static NoiseModel quasi_sum() {
    NoiseModel n(NoiseKind::quasi_sum, 1, 1.0 + std::numbers::sqrt2, 1.5);
    return n;
  }
  /// zeta = (-cos U1, sin U2), independent components.
  static NoiseModel sincos2d() {
    NoiseModel n(NoiseKind::sincos2d, 2, std::numbers::sqrt2, 0.5);
    return n;
  }
  /// Non-isotropic models pass isotropic = false and a full covariance.
  static NoiseModel custom(std::size_t dim, double bound, Mat covariance, bool isotropic,
                           SampleFn sample) {
    NoiseModel n(NoiseKind::custom, dim, bound, covariance(0, 0));
    n.covariance_ = covariance;
    n.isotropic_ = isotropic;
    n.custom_sample_ = std::move(sample);
    n.symmetric_ = false;
    return n;
  }
  /// A model that always returns zero (used to switch noise off).
  static NoiseModel zero(std::size_t dim) {
    Mat cov(dim);
    return custom(dim, 0.0, cov, true, [dim](CounterRng&) { return Vec(dim); }).with_symmetric(true);
  }

  NoiseKind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  /// |zeta| <= bound almost surely.
  double bound() const { return bound_; }
  /// Per-axis variance; meaningful as a scalar only when isotropic().
  double sigma2() const { return sigma2_; }
  bool isotropic() const { return isotropic_; }
  const Mat& covariance() const { return covariance_; }
  /// zeta and -zeta share one law (true for every catalog entry).
  bool symmetric() const { return symmetric_; }
  NoiseModel& with_symmetric(bool s) {
    symmetric_ = s;
    return *this;
  }

  Vec sample(CounterRng& rng) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind_) {
      case NoiseKind::neg_cos:
        return Vec{-std::cos(two_pi * rng.uniform())};
      case NoiseKind::quasi_sum: {
        const double u1 = two_pi * rng.uniform();
        const double u2 = two_pi * rng.uniform();
        return Vec{-(std::cos(u1) + std::numbers::sqrt2 * std::cos(u2))};
      }
      case NoiseKind::sincos2d: {
        const double u1 = two_pi * rng.uniform();
        const double u2 = two_pi * rng.uniform();
        return Vec{-std::cos(u1), std::sin(u2)};
      }
      case NoiseKind::custom:
        return custom_sample_(rng);
    }
    return Vec(dim_);
  }

 private:
  NoiseModel(NoiseKind kind, std::size_t dim, double bound, double sigma2)
      : kind_(kind), dim_(dim), bound_(bound), sigma2_(sigma2), covariance_(dim) {
    for (std::size_t i = 0; i < dim; ++i) covariance_(i, i) = sigma2;
  }

  NoiseKind kind_;
  std::size_t dim_;
  double bound_;
  double sigma2_;
  bool isotropic_ = true;
  bool symmetric_ = true;
  Mat covariance_;
  SampleFn custom_sample_;
};

// ---------------------------------------------------------------- micro scale

/// Quadrature description of the constant m = E ln |eps Hess f1|_2 over one
/// (quasi-)period cell, in the fast variable y = x / eps.
struct MOracle {
  std::size_t dim = 1;
  /// Side length of one period cell per axis.
  double period = 2.0 * std::numbers::pi;
  /// True when the cell must be replicated many times (quasiperiodic).
  bool quasiperiodic = false;
  std::function<double(const Vec&)> scaled_hessian_norm;
};

enum class MicroKind { sin, cos_neg, quasi, sincos2d, modulated, custom };

class MicroScale {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  MicroKind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  double epsilon() const { return eps_; }
  std::size_t dimension() const { return dim_; }
  const std::optional<NoiseModel>& noise() const { return noise_; }
  const std::optional<MOracle>& m_oracle() const { return m_oracle_; }
  /// |f1| <= value_bound * eps on [-10, 10]^d.
  double value_bound() const { return value_bound_; }
  /// |grad f1| <= gradient_bound on [-10, 10]^d.
  double gradient_bound() const { return gradient_bound_; }
  /// eps |Hess f1|_2 <= scaled_hessian_bound on [-10, 10]^d.
  double scaled_hessian_bound() const { return scaled_hessian_bound_; }
  /// Length of one micro period (used to size averaging windows).
  double period() const { return period_; }
  bool has_third_derivative() const {
    return kind_ == MicroKind::sin || kind_ == MicroKind::cos_neg || kind_ == MicroKind::quasi;
  }

  double value(const Vec& x) const {
    const double e = eps_;
    switch (kind_) {
      case MicroKind::sin:
        return e * std::sin(x[0] / e);
      case MicroKind::cos_neg:
        return -e * std::cos(x[0] / e);
      case MicroKind::quasi:
        return e * (std::sin(x[0] / e) + std::sin(std::numbers::sqrt2 * x[0] / e));
      case MicroKind::sincos2d:
        return e * (std::sin(x[0] / e) + std::cos(x[1] / e));
      case MicroKind::modulated: {
        const double c = std::cos(kModFreq * x[0]);
        return e * std::cos(1.0 + c * x[0] / e);
      }
      case MicroKind::custom:
        return custom_value_(x);
    }
    return 0.0;
  }

  Vec gradient(const Vec& x) const {
    const double e = eps_;
    switch (kind_) {
      case MicroKind::sin:
        return Vec{std::cos(x[0] / e)};
      case MicroKind::cos_neg:
        return Vec{std::sin(x[0] / e)};
      case MicroKind::quasi:
        return Vec{std::cos(x[0] / e) +
                   std::numbers::sqrt2 * std::cos(std::numbers::sqrt2 * x[0] / e)};
      case MicroKind::sincos2d:
        return Vec{std::cos(x[0] / e), -std::sin(x[1] / e)};
      case MicroKind::modulated: {
        const Modulation m = modulation(x[0]);
        return Vec{-std::sin(m.theta) * m.dtheta};
      }
      case MicroKind::custom:
        return custom_grad_(x);
    }
    return Vec(dim_);
  }

  Mat hessian(const Vec& x) const {
    const double e = eps_;
    switch (kind_) {
      case MicroKind::sin:
        return Mat::scalar(-std::sin(x[0] / e) / e);
      case MicroKind::cos_neg:
        return Mat::scalar(std::cos(x[0] / e) / e);
      case MicroKind::quasi:
        return Mat::scalar(
            -(std::sin(x[0] / e) + 2.0 * std::sin(std::numbers::sqrt2 * x[0] / e)) / e);
      case MicroKind::sincos2d: {
        Mat h(2);
        h(0, 0) = -std::sin(x[0] / e) / e;
        h(1, 1) = -std::cos(x[1] / e) / e;
        return h;
      }
      case MicroKind::modulated: {
        // theta = 1 + c(x) x / eps; f1' = -sin(theta) eps theta',
        // f1'' = -cos(theta) eps theta'^2 - sin(theta) eps theta''.
        const Modulation m = modulation(x[0]);
        return Mat::scalar(-std::cos(m.theta) * m.dtheta * m.dtheta / e -
                           std::sin(m.theta) * m.d2theta);
      }
      case MicroKind::custom:
        if (!custom_hess_) throw UnsupportedError(id_ + ": no Hessian oracle");
        return custom_hess_(x);
    }
    return Mat(dim_);
  }

  /// f1''' in one dimension (periodic and quasiperiodic entries).
  double third_derivative(double x) const {
    const double e = eps_;
    switch (kind_) {
      case MicroKind::sin:
        return -std::cos(x / e) / (e * e);
      case MicroKind::cos_neg:
        return -std::sin(x / e) / (e * e);
      case MicroKind::quasi:
        return -(std::cos(x / e) + 2.0 * std::numbers::sqrt2 * std::cos(std::numbers::sqrt2 * x / e)) /
               (e * e);
      default:
        throw UnsupportedError(id_ + ": no third-derivative oracle");
    }
  }

  static MicroScale custom(std::string id, double epsilon, std::size_t dim, ValueFn value,
                           GradFn grad, HessFn hess = {}) {
    MicroScale m(MicroKind::custom, std::move(id), epsilon, dim);
    m.custom_value_ = std::move(value);
    m.custom_grad_ = std::move(grad);
    m.custom_hess_ = std::move(hess);
    return m;
  }

 private:
  friend MicroScale catalog_micro(std::string_view id, double epsilon);

  static constexpr double kModFreq = 0.34641016151377545870548926830117447;  // sqrt(3) / 5

  struct Modulation {
    double theta;    // 1 + c x / eps
    double dtheta;   // eps * theta'
    double d2theta;  // eps * theta''
  };
  Modulation modulation(double x) const {
    const double s = std::sin(kModFreq * x), c = std::cos(kModFreq * x);
    const double dc = -kModFreq * s, d2c = -kModFreq * kModFreq * c;
    return {1.0 + c * x / eps_, c + x * dc, 2.0 * dc + x * d2c};
  }

  MicroScale(MicroKind kind, std::string id, double eps, std::size_t dim)
      : kind_(kind), id_(std::move(id)), eps_(eps), dim_(dim), period_(2.0 * std::numbers::pi * eps) {}

  MicroKind kind_;
  std::string id_;
  double eps_;
  std::size_t dim_;
  double period_;
  std::optional<NoiseModel> noise_;
  std::optional<MOracle> m_oracle_;
  double value_bound_ = 1.0;
  double gradient_bound_ = 1.0;
  double scaled_hessian_bound_ = 1.0;
  ValueFn custom_value_;
  GradFn custom_grad_;
  HessFn custom_hess_;
};

// ---------------------------------------------------------------- composite

class MultiscaleObjective {
 public:
  explicit MultiscaleObjective(MacroFunction macro, std::optional<MicroScale> micro = std::nullopt)
      : macro_(std::move(macro)), micro_(std::move(micro)) {
    if (micro_ && micro_->dimension() != macro_.dimension())
      throw CatalogError("micro-scale " + micro_->id() + " has dimension " +
                         std::to_string(micro_->dimension()) + " but macro " + macro_.id() +
                         " has dimension " + std::to_string(macro_.dimension()));
  }

  const MacroFunction& macro() const { return macro_; }
  const std::optional<MicroScale>& micro() const { return micro_; }
  std::size_t dimension() const { return macro_.dimension(); }
  std::string id() const { return macro_.id() + "+" + (micro_ ? micro_->id() : "none"); }

  double value(const Vec& x) const { return macro_.value(x) + (micro_ ? micro_->value(x) : 0.0); }
  Vec gradient(const Vec& x) const {
    Vec g = macro_.gradient(x);
    if (micro_) g += micro_->gradient(x);
    return g;
  }
  Mat hessian(const Vec& x) const {
    Mat h = macro_.hessian(x);
    if (micro_) h += micro_->hessian(x);
    return h;
  }
  bool has_hessian() const {
    return macro_.has_hessian() && (!micro_ || micro_->kind() != MicroKind::custom);
  }
  double third_derivative(double x) const {
    double t = macro_.third_derivative(x);
    if (micro_) t += micro_->third_derivative(x);
    return t;
  }

 private:
  MacroFunction macro_;
  std::optional<MicroScale> micro_;
};

// ---------------------------------------------------------------- catalogs

namespace detail {

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw CatalogError("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Macro catalog: quadratic, quartic, matyas, double-well (k given as
/// "double-well:k=5" or through the k argument).
inline MacroFunction catalog_macro(std::string_view spec, std::optional<double> k = std::nullopt) {
  std::string_view name = spec;
  std::string_view params;
  if (const auto colon = spec.find(':'); colon != std::string_view::npos) {
    name = spec.substr(0, colon);
    params = spec.substr(colon + 1);
  }
  if (name == "double-well") {
    if (!params.empty()) {
      if (params.substr(0, 2) != "k=") throw CatalogError("double-well expects parameter k=<value>");
      k = detail::parse_double(params.substr(2), "double-well k");
    }
    if (!k) throw CatalogError("double-well requires k");
    return MacroFunction::double_well(*k);
  }
  if (!params.empty()) throw CatalogError("macro '" + std::string(name) + "' takes no parameters");
  if (name == "quadratic") return MacroFunction::quadratic();
  if (name == "quartic") return MacroFunction::quartic();
  if (name == "matyas") return MacroFunction::matyas();
  throw CatalogError("unknown macro id '" + std::string(spec) + "'");
}

/// Micro catalog: sin, cos-neg, quasi, sincos2d, modulated.
inline MicroScale catalog_micro(std::string_view id, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("micro-scale epsilon must be positive, got " + std::to_string(epsilon));
  using std::numbers::sqrt2;
  if (id == "sin" || id == "cos-neg") {
    const bool is_sin = id == "sin";
    MicroScale m(is_sin ? MicroKind::sin : MicroKind::cos_neg, std::string(id), epsilon, 1);
    // -sin(U) and -cos(U) share one law.
    m.noise_ = NoiseModel::neg_cos();
    MOracle o;
    o.scaled_hessian_norm = is_sin ? +[](const Vec& y) { return std::fabs(std::sin(y[0])); }
                                   : +[](const Vec& y) { return std::fabs(std::cos(y[0])); };
    m.m_oracle_ = o;
    return m;
  }
  if (id == "quasi") {
    MicroScale m(MicroKind::quasi, "quasi", epsilon, 1);
    m.noise_ = NoiseModel::quasi_sum();
    m.value_bound_ = 2.0;
    m.gradient_bound_ = 1.0 + sqrt2;
    m.scaled_hessian_bound_ = 3.0;
    MOracle o;
    o.quasiperiodic = true;
    o.scaled_hessian_norm = [](const Vec& y) { return std::fabs(std::sin(y[0]) + 2.0 * std::sin(sqrt2 * y[0])); };
    m.m_oracle_ = o;
    return m;
  }
  if (id == "sincos2d") {
    MicroScale m(MicroKind::sincos2d, "sincos2d", epsilon, 2);
    m.noise_ = NoiseModel::sincos2d();
    m.value_bound_ = 2.0;
    m.gradient_bound_ = sqrt2;
    MOracle o;
    o.dim = 2;
    o.scaled_hessian_norm = [](const Vec& y) {
      return std::fmax(std::fabs(std::sin(y[0])), std::fabs(std::cos(y[1])));
    };
    m.m_oracle_ = o;
    return m;
  }
  if (id == "modulated") {
    // Violates both micro-scale conditions: no noise model, no m constant.
    MicroScale m(MicroKind::modulated, "modulated", epsilon, 1);
    const double r = 1.0 + 10.0 * MicroScale::kModFreq;
    m.gradient_bound_ = r;
    m.scaled_hessian_bound_ =
        r * r + epsilon * (2.0 * MicroScale::kModFreq + 10.0 * MicroScale::kModFreq * MicroScale::kModFreq);
    return m;
  }
  throw CatalogError("unknown micro id '" + std::string(id) + "'");
}

// ---------------------------------------------------------------- m constant

struct QuadratureSettings {
  /// Midpoint nodes per period (per axis) at the coarsest level.
  std::size_t nodes_per_period = 512;
  /// Number of periods averaged for quasiperiodic cells.
  std::size_t quasi_periods = 10000;
  /// Target change between successive extrapolated levels.
  double tolerance = 2e-4;
  int max_levels = 4;
  /// Nodes where the norm falls below this are treated as singular and skipped.
  double singular_cutoff = 1e-12;
};

namespace detail {

inline double midpoint_log_average(const MOracle& o, double length, std::size_t n,
                                   double cutoff) {
  const double h = length / static_cast<double>(n);
  double sum = 0.0;
  std::size_t used = 0;
  if (o.dim == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = o.scaled_hessian_norm(Vec{(static_cast<double>(i) + 0.5) * h});
      if (v > cutoff) {
        sum += std::log(v);
        ++used;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double y0 = (static_cast<double>(i) + 0.5) * h;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = o.scaled_hessian_norm(Vec{y0, (static_cast<double>(j) + 0.5) * h});
        if (v > cutoff) {
          sum += std::log(v);
          ++used;
        }
      }
    }
  }
  return used ? sum / static_cast<double>(used) : -INFINITY;
}

}  // namespace detail

/// m = cell average of ln |eps Hess f1|_2. Composite midpoint rule with
/// nodes at singularities skipped; the O(h) error of the log singularities
/// is removed by Richardson extrapolation between levels n and 2n.
inline double m_constant(const MicroScale& micro, const QuadratureSettings& q = {}) {
  if (!micro.m_oracle()) throw UnsupportedError("micro-scale " + micro.id() + " has no m oracle");
  const MOracle& o = *micro.m_oracle();
  const double periods = o.quasiperiodic ? static_cast<double>(q.quasi_periods) : 1.0;
  const double length = o.period * periods;
  std::size_t n = static_cast<std::size_t>(q.nodes_per_period * periods);
  double coarse = detail::midpoint_log_average(o, length, n, q.singular_cutoff);
  double prev_extrapolated = NAN;
  double extrapolated = coarse;
  for (int level = 0; level < q.max_levels; ++level) {
    n *= 2;
    const double fine = detail::midpoint_log_average(o, length, n, q.singular_cutoff);
    extrapolated = 2.0 * fine - coarse;
    if (std::isfinite(prev_extrapolated) && std::fabs(extrapolated - prev_extrapolated) < q.tolerance)
      break;
    prev_extrapolated = extrapolated;
    coarse = fine;
  }
  return extrapolated;
}

// ---------------------------------------------------------------- grad check

struct GradCheckReport {
  double max_relative_error = 0.0;
  Vec worst_point;
  std::size_t points = 0;
  bool passed = false;
};

inline constexpr double kGradCheckTolerance = 1e-5;

/// Compares an analytic gradient against central differences of value.
/// Relative error uses max(|analytic|, 1) as the scale.
inline GradCheckReport grad_check(const std::function<double(const Vec&)>& value,
                                  const std::function<Vec(const Vec&)>& gradient,
                                  const std::vector<Vec>& points, double step) {
  if (!(step > 0.0)) throw DomainError("grad_check: step must be positive");
  GradCheckReport r;
  for (const Vec& x : points) {
    const Vec g = gradient(x);
    double err = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
      Vec xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      const double fd = (value(xp) - value(xm)) / (2.0 * step);
      err = std::fmax(err, std::fabs(fd - g[i]) / std::fmax(std::fabs(g[i]), 1.0));
    }
    if (err >= r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_point = x;
    }
    ++r.points;
  }
  r.passed = r.max_relative_error <= kGradCheckTolerance;
  return r;
}

/// Step must resolve the micro-scale: step <= eps / 100.
inline GradCheckReport grad_check(const MultiscaleObjective& obj, const std::vector<Vec>& points,
                                  double step) {
  if (obj.micro() && step > obj.micro()->epsilon() / 100.0)
    throw DomainError("grad_check: step must not exceed eps/100");
  return grad_check([&](const Vec& x) { return obj.value(x); },
                    [&](const Vec& x) { return obj.gradient(x); }, points, step);
}

}  // namespace gdchaos
