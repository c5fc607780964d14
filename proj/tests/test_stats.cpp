#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "gdchaos/stats.hpp"

using namespace gdchaos;

namespace {

constexpr double kPi = std::numbers::pi;

// Trapezoid integral of exp(-beta f) on [-r, r] with a fine uniform grid.
double brute_z(const MacroFunction& f, double beta, double r, int n = 2000000) {
  const double h = 2 * r / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = -r + h * i;
    s += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(-beta * f.value(Vec{x}));
  }
  return s * h;
}

}  // namespace

TEST(Histogram, CountsAndDensity) {
  const std::vector<double> xs = {0.0, 0.1, 0.5, 0.99, 1.0, 2.0, -1.0};
  const EmpiricalDistribution h = make_histogram(xs, 4, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(h.count(0), 2);
  EXPECT_DOUBLE_EQ(h.count(2), 1);
  EXPECT_DOUBLE_EQ(h.count(3), 2);  // the upper edge belongs to the last bin
  EXPECT_DOUBLE_EQ(h.overflow(), 2);
  double mass = 0;
  for (std::size_t i = 0; i < 4; ++i) mass += h.density(i) * h.bin_width(0, i);
  EXPECT_NEAR(mass, 1.0, 1e-15);
}

TEST(Histogram, CdfAndQuantileInvert) {
  CounterRng rng(1, 0);
  std::vector<double> xs(10000);
  for (double& x : xs) x = rng.uniform();
  const EmpiricalDistribution h = make_histogram(xs, 50, {0.0, 1.0});
  for (double u : {0.1, 0.37, 0.9}) EXPECT_NEAR(h.cdf(h.quantile(u)), u, 1e-12);
}

TEST(Histogram, TwoDimensional) {
  const std::vector<double> xy = {0.1, 0.1, 0.9, 0.9, 0.9, 0.1, 0.2, 0.2};
  const EmpiricalDistribution h = make_histogram_2d(xy, 2, 2, {0, 1}, {0, 1});
  EXPECT_DOUBLE_EQ(h.count(0, 0), 2);
  EXPECT_DOUBLE_EQ(h.count(1, 1), 1);
  EXPECT_DOUBLE_EQ(h.count(1, 0), 1);
  EXPECT_DOUBLE_EQ(h.density(0, 0), 2.0);
}

TEST(Histogram, Preconditions) {
  EXPECT_THROW(make_histogram(std::vector<double>{}, 10, {0, 1}), DomainError);
  EXPECT_THROW(make_histogram(std::vector<double>{0.5}, 1, {0, 1}), DomainError);
  EXPECT_THROW(make_histogram(std::vector<double>{0.5}, 10, {0, INFINITY}), DomainError);
}

TEST(NormalCdf, Values) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_cdf(3.0, 1.0, 4.0), normal_cdf(1.0), 1e-15);
}

TEST(Gibbs, QuadraticNormalizer) {
  // exp(-2 (x^2/2) / (eta s2)) integrates to sqrt(pi eta s2).
  for (double eta : {0.2, 0.025, 0.001}) {
    const GibbsDensity g(MacroFunction::quadratic(), eta, 0.5);
    EXPECT_NEAR(g.z() / std::sqrt(kPi * eta * 0.5), 1.0, 1e-10) << eta;
    EXPECT_LT(g.z_relative_error(), 1e-8);
    EXPECT_LT(g.tail_bound(), 1e-12);
  }
}

TEST(Gibbs, QuarticNormalizer) {
  // int exp(-a x^4) dx = 2 Gamma(5/4) a^{-1/4}, a = 1 / (2 eta s2).
  for (double eta : {0.2, 0.01}) {
    const double a = 1.0 / (2.0 * eta * 0.5);
    const GibbsDensity g(MacroFunction::quartic(), eta, 0.5);
    EXPECT_NEAR(g.z() / (2.0 * std::tgamma(1.25) * std::pow(a, -0.25)), 1.0, 1e-10);
  }
}

TEST(Gibbs, DoubleWellNormalizerAgainstBruteForce) {
  const MacroFunction f = MacroFunction::double_well(0.3);
  const double eta = 0.1, s2 = 0.5;
  const GibbsDensity g(f, eta, s2);
  EXPECT_NEAR(g.z() / brute_z(f, 2.0 / (eta * s2), 4.0), 1.0, 1e-8);
}

TEST(Gibbs, MatyasNormalizer) {
  // Gaussian integral 2 pi / (beta sqrt(det H)), det H = 0.04.
  const double eta = 0.1, s2 = 0.5, beta = 2.0 / (eta * s2);
  const GibbsDensity g(MacroFunction::matyas(), eta, s2);
  EXPECT_NEAR(g.z() / (2.0 * kPi / (beta * 0.2)), 1.0, 1e-8);
}

TEST(Gibbs, CdfQuantileSymmetry) {
  const GibbsDensity g(MacroFunction::quartic(), 0.1, 0.5);
  EXPECT_NEAR(g.cdf(0.0), 0.5, 1e-12);
  for (double u : {0.01, 0.3, 0.77}) EXPECT_NEAR(g.cdf(g.quantile(u)), u, 1e-12);
  EXPECT_NEAR(g.quantile(0.2), -g.quantile(0.8), 1e-10);
}

TEST(Gibbs, SamplerMatchesLaw) {
  const GibbsDensity g(MacroFunction::double_well(1.0), 0.1, 0.5);
  const auto xs = gibbs_sample(g, 200000, 3, 1);
  // Kolmogorov 99.9% quantile is about 1.95 / sqrt(n).
  EXPECT_LT(ks_distance(xs, [&g](double x) { return g.cdf(x); }), 1.95 / std::sqrt(200000.0));
}

TEST(Gibbs, QuadraticVariance) {
  const double eta = 0.05;
  const GibbsDensity g(MacroFunction::quadratic(), eta, 0.5);
  EXPECT_NEAR(g.expectation([](const Vec& x) { return x[0] * x[0]; }), eta / 4.0, 1e-12);
  const auto xs = gibbs_sample(g, 400000, 5, 1);
  double s2 = 0;
  for (double x : xs) s2 += x * x;
  const double v = eta / 4.0;
  EXPECT_NEAR(s2 / xs.size(), v, 5.0 * v * std::sqrt(2.0 / xs.size()));
}

TEST(Gibbs, SamplerWorkerInvariance) {
  const GibbsDensity g(MacroFunction::matyas(), 0.1, 0.5);
  const auto a = gibbs_sample(g, 10000, 7, 1);
  EXPECT_EQ(gibbs_sample(g, 10000, 7, 3), a);
  EXPECT_EQ(a.size(), 20000u);
}

TEST(Gibbs, MatyasMarginalVariance) {
  // Covariance eta s2 / 2 H^{-1}; H^{-1}_{00} = 0.52 / 0.04.
  const double eta = 0.01;
  const GibbsDensity g(MacroFunction::matyas(), eta, 0.5);
  EXPECT_NEAR(g.expectation([](const Vec& x) { return x[0] * x[0]; }) / (eta * 0.25 * 13.0), 1.0, 1e-6);
}

TEST(Wasserstein, ExactSmallCases) {
  EXPECT_DOUBLE_EQ(w1_distance_1d({0, 1}, {2, 3}), 2.0);
  EXPECT_DOUBLE_EQ(w1_distance_1d({0}, {0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(w2_distance_1d({0}, {0, 2}), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(w1_distance_1d({3, 1, 2}, {2, 3, 1}), 0.0);
  EXPECT_NEAR(w1_distance_1d({0, 1, 2}, {0.5, 1.5}), 0.5, 1e-15);
}

TEST(Wasserstein, ShiftInvariance) {
  CounterRng r(2, 0);
  std::vector<double> a(1000), b(1000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = r.uniform();
    b[i] = a[i] + 0.25;
  }
  EXPECT_NEAR(w1_distance_1d(a, b), 0.25, 1e-12);
}

TEST(Wasserstein, PointMassAgainstGibbs) {
  // W1(delta_0, N(0, v)) = E|X| = sqrt(2 v / pi).
  const double eta = 0.1;
  const GibbsDensity g(MacroFunction::quadratic(), eta, 0.5);
  EXPECT_NEAR(w1_distance_1d({0.0}, g), std::sqrt(2.0 * (eta / 4.0) / kPi), 1e-6);
  // E|X - a| = a (2 Phi(a / s) - 1) + 2 s phi(a / s).
  const double a = 0.2, sd = std::sqrt(eta / 4.0);
  const double folded = a * (2.0 * normal_cdf(a / sd) - 1.0) + 2.0 * sd * std::exp(-0.5 * a * a / (sd * sd)) / std::sqrt(2.0 * kPi);
  EXPECT_NEAR(w1_distance_1d({a}, g), folded, 1e-6);
}

TEST(Wasserstein, ExactPathAgreesWithQuantileQuadrature) {
  const GibbsDensity g(MacroFunction::quartic(), 0.05, 1.5);
  CounterRng r(6, 0);
  std::vector<double> xs(20000);
  for (double& x : xs) x = 1.1 * g.sample(r)[0] + 0.01;
  const double exact = w1_distance_1d(xs, g);
  EXPECT_NEAR(exact, wasserstein_to_law(xs, [&g](double u) { return g.quantile(u); }, 1.0), 1e-3 * exact);
}

TEST(Wasserstein, SlicedShift) {
  // A unit shift projects to |cos theta|, whose mean over [0, pi) is 2/pi.
  CounterRng r(3, 0);
  std::vector<double> a(4000), b(4000);
  for (std::size_t i = 0; i < a.size(); i += 2) {
    a[i] = r.uniform();
    a[i + 1] = r.uniform();
    b[i] = a[i] + 1.0;
    b[i + 1] = a[i + 1];
  }
  EXPECT_DOUBLE_EQ(sliced_w1(a, a, 16, 1), 0.0);
  EXPECT_NEAR(sliced_w1(a, b, 4096, 1), 2.0 / kPi, 0.02);
  EXPECT_THROW(sliced_w1(a, b, 8, 1), DomainError);
}

TEST(Ks, MidpointQuantiles) {
  const int n = 100;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = (i + 0.5) / n;
  EXPECT_NEAR(ks_distance(xs, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.5 / n, 1e-15);
}

TEST(Invariance, ConstantTestFunctionGivesZero) {
  const GibbsDensity g(MacroFunction::quadratic(), 0.1, 0.5);
  const McEstimate r = invariance_residual(g, NoiseModel::neg_cos(), TestFunction::constant(2.0), 1000, 1);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(Invariance, WorkerInvarianceAndShrinkingResidual) {
  const TestFunction h = TestFunction::bump(Vec{0.0}, 1.0);
  const GibbsDensity g1(MacroFunction::quadratic(), 0.2, 0.5), g2(MacroFunction::quadratic(), 0.05, 0.5);
  const McEstimate a = invariance_residual(g1, NoiseModel::neg_cos(), h, 300000, 9, 1);
  const McEstimate b = invariance_residual(g1, NoiseModel::neg_cos(), h, 300000, 9, 4);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
  const McEstimate c = invariance_residual(g2, NoiseModel::neg_cos(), h, 300000, 9, 1);
  EXPECT_LT(std::fabs(c.estimate), std::fabs(a.estimate));
  EXPECT_THROW(invariance_residual(g1, NoiseModel::quasi_sum(), h, 10, 1), DomainError);
}

TEST(Invariance, BumpShape) {
  const TestFunction h = TestFunction::bump(Vec{1.0}, 2.0);
  EXPECT_DOUBLE_EQ(h(Vec{1.0}), 1.0);
  EXPECT_DOUBLE_EQ(h(Vec{2.0}), std::pow(0.75, 3));
  EXPECT_DOUBLE_EQ(h(Vec{3.5}), 0.0);
}

TEST(GradMoment, QuadraticMatchesVariance) {
  // E|x|^2 under the Gibbs law of x^2/2 is eta s2 / 2.
  const double eta = 0.1;
  const McEstimate m = grad_second_moment(MacroFunction::quadratic(), eta, 0.5, 1000000, 4);
  EXPECT_NEAR(m.estimate, eta / 4.0, 5.0 * m.std_error);
  EXPECT_LT(m.std_error, 1e-4);
}

TEST(GaussianApprox, DoubleWellCovariance) {
  const double k = 5, eta = 0.01, s2 = 0.5;
  const GaussianApprox g = gaussian_approx(MacroFunction::double_well(k), eta, s2, Vec{1.0});
  EXPECT_NEAR(g.covariance(0, 0), eta * s2 / (16.0 * k), 1e-18);
  EXPECT_NEAR(g.cdf(1.0), 0.5, 1e-15);
  EXPECT_NEAR(g.pdf(Vec{1.0}), 1.0 / std::sqrt(2 * kPi * g.covariance(0, 0)), 1e-9);
  EXPECT_THROW(gaussian_approx(MacroFunction::quartic(), eta, s2, Vec{0.0}), UnsupportedError);
}

TEST(Fits, LogLogSlope) {
  const std::vector<double> x = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> y;
  for (double v : x) y.push_back(-3.0 * std::pow(v, 2.5));
  EXPECT_NEAR(loglog_slope(x, y), 2.5, 1e-12);
}
