#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gdchaos/chaos.hpp"

using namespace gdchaos;

TEST(Lyapunov, QuadraticWithoutMicroScale) {
  const MultiscaleObjective obj(MacroFunction::quadratic());
  const LyapunovEstimate e = lyapunov(obj, 0.1, Vec{1.0}, 100000, 0);
  EXPECT_NEAR(e.lambda, std::log(0.9), 1e-12);
  EXPECT_TRUE(std::isnan(e.residual));
}

TEST(Lyapunov, PeriodicMicroScale) {
  const MultiscaleObjective obj(MacroFunction::quadratic(), catalog_micro("sin", 1e-5));
  const LyapunovEstimate e = lyapunov(obj, 0.01, Vec{0.3}, 1000000, 1000, -std::numbers::ln2);
  EXPECT_NEAR(e.residual, -std::numbers::ln2, 0.05);
  EXPECT_NEAR(e.lambda, e.residual + std::log(0.01 / 1e-5), 1e-12);
}

TEST(Lyapunov, Preconditions) {
  const MultiscaleObjective obj(MacroFunction::quadratic(), catalog_micro("sin", 1e-5));
  EXPECT_THROW(lyapunov(obj, 0.01, Vec{0.3}, 99999, 0), DomainError);
  EXPECT_THROW(lyapunov(obj, 0.0, Vec{0.3}, 100000, 0), DomainError);
  EXPECT_NEAR(chaos_threshold(-std::numbers::ln2, 1e-3), 2e-3, 1e-15);
}

TEST(Bifurcation, SmallStepIsFixedPoint) {
  const MultiscaleObjective obj(MacroFunction::quartic(), catalog_micro("cos-neg", 1e-3));
  BifurcationSettings s;
  s.burn_in = 20000;
  s.record = 256;
  const BifurcationDiagram d = bifurcation_scan(obj, {0.2e-3, 0.5e-3}, Vec{1e-4}, s);
  for (const auto& r : d.rows) {
    EXPECT_EQ(r.status, OrbitClass::periodic);
    EXPECT_EQ(r.period, 1u);
  }
  EXPECT_FALSE(d.first_aperiodic().has_value());
}

TEST(Bifurcation, PeriodTwoAndChaos) {
  const double eps = 1e-3;
  const MultiscaleObjective obj(MacroFunction::quartic(), catalog_micro("cos-neg", eps));
  BifurcationSettings s;
  s.burn_in = 100000;
  s.record = 2048;
  const BifurcationDiagram d = bifurcation_scan(obj, {2.5 * eps, 3.9 * eps}, Vec{0.1 * eps}, s);
  EXPECT_EQ(d.rows[0].period, 2u);
  EXPECT_EQ(d.rows[1].status, OrbitClass::aperiodic);
}

TEST(Bifurcation, WorkerInvariance) {
  const double eps = 1e-3;
  const MultiscaleObjective obj(MacroFunction::quartic(), catalog_micro("cos-neg", eps));
  BifurcationSettings s;
  s.burn_in = 5000;
  s.record = 128;
  std::vector<double> grid;
  for (int j = 0; j < 9; ++j) grid.push_back(eps * (0.5 + 0.4 * j));
  const BifurcationDiagram a = bifurcation_scan(obj, grid, Vec{1e-4}, s);
  s.workers = 3;
  const BifurcationDiagram b = bifurcation_scan(obj, grid, Vec{1e-4}, s);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a.rows[i].points, b.rows[i].points);
    EXPECT_EQ(a.rows[i].period, b.rows[i].period);
  }
}

TEST(Bifurcation, DivergedRowsAreLabelled) {
  const MultiscaleObjective obj(MacroFunction::quadratic(), catalog_micro("sin", 1e-3));
  BifurcationSettings s;
  s.burn_in = 1000;
  s.record = 16;
  const BifurcationDiagram d = bifurcation_scan(obj, {2.5}, Vec{0.5}, s);
  EXPECT_EQ(d.rows[0].status, OrbitClass::diverged);
}

TEST(Period3, FoundCertificateVerifies) {
  const MultiscaleObjective obj(MacroFunction::quartic(), catalog_micro("sin", 1e-6));
  const auto cert = find_period3(obj, 0.1, {-1.0, 1.0}, 200000);
  ASSERT_TRUE(cert.has_value());
  EXPECT_TRUE(verify_period3(obj, 0.1, *cert));
  auto phi = [&](double x) { return x - 0.1 * obj.gradient(Vec{x})[0]; };
  EXPECT_EQ(cert->b, phi(cert->a));
  EXPECT_EQ(cert->d, phi(cert->c));
  Period3Certificate bad = *cert;
  bad.ascending = !bad.ascending;
  EXPECT_FALSE(verify_period3(obj, 0.1, bad));
}

TEST(Period3, NoneForContractingMap) {
  const MultiscaleObjective obj(MacroFunction::quadratic());
  EXPECT_FALSE(find_period3(obj, 0.1, {-1.0, 1.0}, 10000).has_value());
}

TEST(Escape, SetConnectednessFlipsAtCriticalK) {
  EXPECT_NEAR(kCriticalK, 3.0 * std::sqrt(3.0) / 8.0, 1e-15);
  EXPECT_TRUE(s_set_analysis(kCriticalK * (1 - 1e-9)).s_connected);
  EXPECT_FALSE(s_set_analysis(kCriticalK * (1 + 1e-9)).s_connected);
  EXPECT_TRUE(s_set_analysis(kCriticalK).boundary);
  EXPECT_FALSE(s_set_analysis(0.5).boundary);
}

TEST(Escape, IntervalEndpointsSolveTheCubic) {
  for (double k : {0.02, 0.4, 0.9, 5.0}) {
    const EscapeReport r = s_set_analysis(k);
    for (const Range& iv : r.s_intervals)
      for (double x : {iv.lo, iv.hi}) EXPECT_NEAR(std::fabs(4 * k * x * (x * x - 1)), 1.0, 1e-10) << k;
    EXPECT_EQ(r.s_intervals.size(), r.s_connected ? 1u : 3u);
  }
}

TEST(Escape, RootsAgreeWithGridScan) {
  for (double k = 0.05; k < 3.0; k += 0.0373) {
    std::size_t comps = 0;
    bool inside = false;
    for (int i = 0; i <= 200000; ++i) {
      const double x = -2.0 + 4.0 * i / 200000.0;
      const bool in = std::fabs(4 * k * x * (x * x - 1)) <= 1.0;
      comps += in && !inside;
      inside = in;
    }
    EXPECT_EQ(s_set_analysis(k).s_connected, comps == 1) << k;
  }
}

TEST(Escape, ShallowWellEscapesDeepWellTraps) {
  EXPECT_GT(escape_scan(0.02, 0.05, 1e-4, 0.5, 200000).crossings, 0u);
  const EscapeReport deep = escape_scan(5.0, 0.05, 1e-4, 0.5, 200000);
  EXPECT_EQ(deep.crossings, 0u);
  EXPECT_FALSE(deep.escaped);
  EXPECT_THROW(escape_scan(1.0, 0.05, 1e-4, 0.0, 10), DomainError);
}

TEST(Coupling, QuadraticRateIsExact) {
  const CouplingResult c = coupling_rate(MacroFunction::quadratic(), NoiseModel::neg_cos(), 0.1, 2000, 4, 1);
  EXPECT_NEAR(c.rate, 0.9, 1e-9);
  EXPECT_DOUBLE_EQ(c.theoretical, 0.9);
}

TEST(Coupling, MatyasBelowTheoreticalAndWorkerInvariant) {
  const CouplingResult a = coupling_rate(MacroFunction::matyas(), NoiseModel::sincos2d(), 0.1, 3000, 4, 2, 1);
  const CouplingResult b = coupling_rate(MacroFunction::matyas(), NoiseModel::sincos2d(), 0.1, 3000, 4, 2, 3);
  EXPECT_NEAR(a.theoretical, 0.996, 1e-15);
  EXPECT_LE(a.rate, a.theoretical + 0.01);
  EXPECT_EQ(a.pair_rates, b.pair_rates);
  EXPECT_THROW(coupling_rate(MacroFunction::quartic(), NoiseModel::neg_cos(), 0.1, 10, 1, 1), UnsupportedError);
}

TEST(ModifiedEquation, MatchesSymbolicDerivatives) {
  // f = x^2/2 + eps sin(x/eps): g = -(x + cos u), g' = -(1 - sin u / eps), g'' = cos u / eps^2.
  const double eps = 1e-4, eta = 1e-3;
  const MultiscaleObjective obj(MacroFunction::quadratic(), catalog_micro("sin", eps));
  for (double x : {-1.3, -0.2, 0.05, 0.71, 1.9}) {
    const double u = x / eps;
    const double g = -(x + std::cos(u)), g1 = -(1 - std::sin(u) / eps), g2 = std::cos(u) / (eps * eps);
    const ModifiedEqTerms t = modified_eq_terms(obj, x, eta);
    EXPECT_NEAR(t.g, std::fabs(g), 1e-12 * std::fabs(g));
    EXPECT_NEAR(t.eta_g2, std::fabs(-0.5 * eta * g1 * g), 1e-11 * t.eta_g2);
    const double g3 = g2 * g * g / 12.0 + g1 * g1 * g / 3.0;
    EXPECT_NEAR(t.eta2_g3, std::fabs(eta * eta * g3), 1e-10 * t.eta2_g3);
  }
  EXPECT_THROW(modified_eq_terms(MultiscaleObjective(MacroFunction::matyas(), catalog_micro("sincos2d", eps)), 0.0, eta),
               UnsupportedError);
}
