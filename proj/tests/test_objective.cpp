#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gdchaos/objective.hpp"

using namespace gdchaos;

namespace {

constexpr double kZeta3 = 1.2020569031595942854;

std::vector<Vec> points_1d() { return {Vec{-1.7}, Vec{-0.3}, Vec{0.01}, Vec{0.42}, Vec{1.3}}; }
std::vector<Vec> points_2d() { return {Vec{-1.1, 0.4}, Vec{0.2, 0.9}, Vec{0.03, -0.07}, Vec{1.5, -1.2}}; }

}  // namespace

TEST(Catalog, MacroIds) {
  EXPECT_EQ(catalog_macro("quadratic").id(), "quadratic");
  EXPECT_EQ(catalog_macro("matyas").dimension(), 2u);
  EXPECT_EQ(catalog_macro("double-well:k=5").id(), "double-well:k=5");
  EXPECT_EQ(catalog_macro("double-well", 0.5).id(), "double-well:k=0.5");
  EXPECT_THROW(catalog_macro("rosenbrock"), CatalogError);
  EXPECT_THROW(catalog_macro("double-well"), CatalogError);
  EXPECT_THROW(catalog_macro("double-well:q=1"), CatalogError);
  EXPECT_THROW(catalog_macro("quartic:k=1"), CatalogError);
  EXPECT_THROW(catalog_macro("double-well:k=-1"), CatalogError);
}

TEST(Catalog, MicroIds) {
  for (const char* id : {"sin", "cos-neg", "quasi", "modulated"}) EXPECT_EQ(catalog_micro(id, 1e-3).dimension(), 1u);
  EXPECT_EQ(catalog_micro("sincos2d", 1e-3).dimension(), 2u);
  EXPECT_THROW(catalog_micro("saw", 1e-3), CatalogError);
  EXPECT_THROW(catalog_micro("sin", 0.0), DomainError);
  EXPECT_THROW(catalog_micro("sin", -1e-3), DomainError);
  EXPECT_THROW(MultiscaleObjective(MacroFunction::quadratic(), catalog_micro("sincos2d", 1e-3)), CatalogError);
}

TEST(Objective, MacroValues) {
  EXPECT_DOUBLE_EQ(MacroFunction::quadratic().value(Vec{3.0}), 4.5);
  EXPECT_DOUBLE_EQ(MacroFunction::quartic().value(Vec{2.0}), 4.0);
  EXPECT_DOUBLE_EQ(MacroFunction::double_well(5).value(Vec{2.0}), 45.0);
  EXPECT_NEAR(MacroFunction::matyas().value(Vec{1.0, 1.0}), 1.0, 1e-15);
  EXPECT_NEAR(MacroFunction::matyas().value(Vec{1.0, -1.0}), 0.04, 1e-15);
}

TEST(Objective, MicroGradientFormulas) {
  const double eps = 1e-3, x = 0.1234;
  EXPECT_NEAR(catalog_micro("sin", eps).gradient(Vec{x})[0], std::cos(x / eps), 1e-12);
  EXPECT_NEAR(catalog_micro("cos-neg", eps).gradient(Vec{x})[0], std::sin(x / eps), 1e-12);
  const double u = x / eps;
  EXPECT_NEAR(catalog_micro("quasi", eps).gradient(Vec{x})[0], std::cos(u) + std::sqrt(2.0) * std::cos(std::sqrt(2.0) * u),
              1e-11);
}

TEST(Objective, GradientsMatchFiniteDifferences) {
  const double eps = 1e-2;
  for (const char* macro : {"quadratic", "quartic", "double-well:k=1", "double-well:k=5"}) {
    for (const char* micro : {"sin", "cos-neg", "quasi", "modulated"}) {
      const MultiscaleObjective obj(catalog_macro(macro), catalog_micro(micro, eps));
      const auto r = grad_check(obj, points_1d(), eps / 1000.0);
      EXPECT_TRUE(r.passed) << obj.id() << " error " << r.max_relative_error;
    }
  }
  const MultiscaleObjective m(MacroFunction::matyas(), catalog_micro("sincos2d", eps));
  EXPECT_TRUE(grad_check(m, points_2d(), eps / 1000.0).passed);
  EXPECT_THROW(grad_check(m, points_2d(), eps), DomainError);
}

TEST(Objective, HessianMatchesGradientDifferences) {
  const double eps = 1e-2, h = 1e-7;
  for (const char* micro : {"sin", "cos-neg", "quasi", "modulated"}) {
    const MultiscaleObjective obj(MacroFunction::double_well(2.0), catalog_micro(micro, eps));
    for (const Vec& x : points_1d()) {
      const double fd = (obj.gradient(Vec{x[0] + h})[0] - obj.gradient(Vec{x[0] - h})[0]) / (2 * h);
      const double an = obj.hessian(x)(0, 0);
      EXPECT_NEAR(an, fd, 1e-5 * std::fmax(1.0, std::fabs(an))) << micro;
    }
  }
  const MultiscaleObjective m(MacroFunction::matyas(), catalog_micro("sincos2d", eps));
  for (const Vec& x : points_2d())
    for (std::size_t j = 0; j < 2; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec fd = (1.0 / (2 * h)) * (m.gradient(xp) - m.gradient(xm));
      for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(m.hessian(x)(i, j), fd[i], 1e-4);
    }
}

TEST(Objective, ThirdDerivativeMatchesHessianDifferences) {
  const double eps = 1e-2, h = 1e-7;
  for (const char* macro : {"quadratic", "quartic", "double-well:k=1"}) {
    const MultiscaleObjective obj(catalog_macro(macro), catalog_micro("sin", eps));
    for (const Vec& x : points_1d()) {
      const double fd = (obj.hessian(Vec{x[0] + h})(0, 0) - obj.hessian(Vec{x[0] - h})(0, 0)) / (2 * h);
      const double an = obj.third_derivative(x[0]);
      EXPECT_NEAR(an, fd, 1e-4 * std::fmax(1.0, std::fabs(an))) << macro;
    }
  }
}

TEST(Objective, MicroValueIsOrderEpsilon) {
  for (const double eps : {1e-2, 1e-5}) {
    const MicroScale m = catalog_micro("quasi", eps);
    for (double x = -2.0; x <= 2.0; x += 0.01) EXPECT_LE(std::fabs(m.value(Vec{x})), m.value_bound() * eps);
  }
}

TEST(Noise, MomentsAndBounds) {
  for (const NoiseModel& n : {NoiseModel::neg_cos(), NoiseModel::quasi_sum(), NoiseModel::sincos2d()}) {
    CounterRng rng(5, 0);
    const int count = 400000;
    std::vector<double> s(n.dimension()), s2(n.dimension());
    for (int i = 0; i < count; ++i) {
      const Vec z = n.sample(rng);
      double norm2 = 0;
      for (std::size_t k = 0; k < n.dimension(); ++k) {
        s[k] += z[k];
        s2[k] += z[k] * z[k];
        norm2 += z[k] * z[k];
      }
      ASSERT_LE(std::sqrt(norm2), n.bound() + 1e-15);
    }
    for (std::size_t k = 0; k < n.dimension(); ++k) {
      const double se = std::sqrt(n.sigma2() / count);
      EXPECT_NEAR(s[k] / count, 0.0, 5 * se);
      EXPECT_NEAR(s2[k] / count, n.sigma2(), 0.01 * n.sigma2());
    }
  }
}

TEST(Noise, VarianceConstants) {
  // E cos^2 U = 1/2; quasi adds an independent sqrt2 cos term.
  EXPECT_DOUBLE_EQ(NoiseModel::neg_cos().sigma2(), 0.5);
  EXPECT_DOUBLE_EQ(NoiseModel::quasi_sum().sigma2(), 1.5);
  EXPECT_DOUBLE_EQ(NoiseModel::sincos2d().sigma2(), 0.5);
  EXPECT_FALSE(catalog_micro("modulated", 1e-3).noise().has_value());
}

TEST(MConstant, PeriodicSin) {
  // Mean of ln|sin u| over a period is -ln 2.
  EXPECT_NEAR(m_constant(catalog_micro("sin", 1e-6)), -std::numbers::ln2, 1e-3);
  EXPECT_NEAR(m_constant(catalog_micro("cos-neg", 1e-6)), -std::numbers::ln2, 1e-3);
}

TEST(MConstant, SinCos2d) {
  // E ln max(|sin a|, |cos b|) = (8 / pi^2) int_0^{pi/2} t ln sin t dt = 7 zeta(3) / (2 pi^2) - ln 2.
  const double expected = 7.0 * kZeta3 / (2.0 * std::numbers::pi * std::numbers::pi) - std::numbers::ln2;
  EXPECT_NEAR(m_constant(catalog_micro("sincos2d", 1e-6)), expected, 1e-3);
}

TEST(MConstant, Quasiperiodic) {
  // For |s| <= 1, the mean of ln|s + 2 sin v| over v is ln(2/2) = 0, so m = 0.
  EXPECT_NEAR(m_constant(catalog_micro("quasi", 1e-6)), 0.0, 2e-3);
}

TEST(MConstant, ModulatedHasNoOracle) {
  EXPECT_THROW(m_constant(catalog_micro("modulated", 1e-3)), UnsupportedError);
}
