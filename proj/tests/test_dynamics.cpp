#include <gtest/gtest.h>

#include <cmath>

#include "gdchaos/dynamics.hpp"

using namespace gdchaos;

namespace {

MultiscaleObjective quad_sin(double eps) { return MultiscaleObjective(MacroFunction::quadratic(), catalog_micro("sin", eps)); }

}  // namespace

TEST(Maps, GradientStepFormula) {
  const double eps = 1e-3, eta = 0.05, x = 0.37;
  const Vec y = gd_step(quad_sin(eps), eta, Vec{x});
  EXPECT_DOUBLE_EQ(y[0], x - eta * (x + std::cos(x / eps)));
}

TEST(Maps, StochasticStepUsesMacroAndNoise) {
  const double eta = 0.1;
  const MapSpec map = MapSpec::stochastic(MacroFunction::quadratic(), NoiseModel::neg_cos(), eta);
  State s = map.initial_state(Vec{0.5});
  advance(map, s, 9, 0, 0);
  CounterRng rng(9, 0, 0);
  const double z = NoiseModel::neg_cos().sample(rng)[0];
  EXPECT_DOUBLE_EQ(s.x[0], 0.5 - eta * 0.5 + eta * z);
}

TEST(Maps, HeavyBallStepFormula) {
  const MultiscaleObjective obj = quad_sin(1e-3);
  const double eta = 0.01, gamma = 0.9;
  State s{Vec{0.3}, Vec{0.02}};
  const State t = heavy_ball_step(obj, eta, gamma, s);
  const double v = gamma * 0.02 - eta * obj.gradient(Vec{0.3})[0];
  EXPECT_DOUBLE_EQ(t.aux[0], v);
  EXPECT_DOUBLE_EQ(t.x[0], 0.3 + v);
}

TEST(Maps, NagStepFormula) {
  const MultiscaleObjective obj = quad_sin(1e-3);
  const double eta = 0.01, mu = 1.0;
  const double c = (1 - std::sqrt(mu * eta)) / (1 + std::sqrt(mu * eta));
  State s{Vec{0.3}, Vec{0.31}};
  const State t = nag_sc_step(obj, eta, mu, s);
  const double y = 0.3 - eta * obj.gradient(Vec{0.3})[0];
  EXPECT_DOUBLE_EQ(t.aux[0], y);
  EXPECT_DOUBLE_EQ(t.x[0], y + c * (y - 0.31));
  EXPECT_DOUBLE_EQ(MapSpec::nag_sc(obj, eta, mu).nag_c(), c);
}

TEST(Maps, HeavyBallWithoutMomentumIsGd) {
  const MultiscaleObjective obj = quad_sin(1e-4);
  const MapSpec hb = MapSpec::heavy_ball(obj, 0.01, 0.0), gd = MapSpec::gd(obj, 0.01);
  const Orbit a = iterate(hb, Vec{0.5}, 20000), b = iterate(gd, Vec{0.5}, 20000);
  EXPECT_EQ(a.x, b.x);
}

TEST(Maps, Preconditions) {
  const MultiscaleObjective obj = quad_sin(1e-3);
  EXPECT_THROW(MapSpec::gd(obj, 0.0), DomainError);
  EXPECT_THROW(MapSpec::gd(obj, -0.1), DomainError);
  EXPECT_THROW(MapSpec::heavy_ball(obj, 0.1, 1.0), DomainError);
  EXPECT_THROW(MapSpec::nag_sc(obj, 0.1, 0.0), DomainError);
  EXPECT_THROW(MapSpec::nag_sc(obj, 2.0, 1.0), DomainError);
  EXPECT_THROW(MapSpec::stochastic_from(MultiscaleObjective(MacroFunction::quadratic(), catalog_micro("modulated", 1e-3)), 0.1),
               UnsupportedError);
  EXPECT_THROW(iterate(MapSpec::gd(obj, 0.1), Vec{0.1, 0.2}, 10), DomainError);
  EXPECT_EQ(parse_map_kind(to_string(MapKind::nag_sc)), MapKind::nag_sc);
  EXPECT_THROW(parse_map_kind("adam"), CatalogError);
}

TEST(Maps, DivergenceIsReported) {
  const MapSpec map = MapSpec::gd(MultiscaleObjective(MacroFunction::quadratic()), 3.0);
  try {
    iterate(map, Vec{1.0}, 1000);
    FAIL();
  } catch (const DivergenceError& e) {
    // |1 - 3|^k > 1e12 first at k = 40.
    EXPECT_EQ(e.iteration(), 40u);
  }
}

TEST(Orbit, BurnInAndThinning) {
  const MapSpec map = MapSpec::gd(quad_sin(1e-3), 0.05);
  const Orbit full = iterate(map, Vec{0.4}, 100);
  const Orbit part = iterate(map, map.initial_state(Vec{0.4}), 60, 40, 3, 0);
  ASSERT_EQ(part.size(), 21u);
  for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part.x[i], full.x[40 + 3 * i]);
}

TEST(Orbit, StochasticOrbitDependsOnlyOnSeed) {
  const MapSpec map = MapSpec::stochastic_from(quad_sin(1e-3), 0.1);
  const Orbit a = iterate(map, map.initial_state(Vec{0.1}), 1000, 0, 1, 77);
  const Orbit b = iterate(map, map.initial_state(Vec{0.1}), 1000, 0, 1, 77);
  const Orbit c = iterate(map, map.initial_state(Vec{0.1}), 1000, 0, 1, 78);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.x, c.x);
}

TEST(Ensemble, WorkerCountInvariance) {
  const MapSpec map = MapSpec::stochastic_from(MultiscaleObjective(MacroFunction::matyas(), catalog_micro("sincos2d", 1e-5)), 0.05);
  const auto init = uniform_box(1000, 2, -2, 2, 3);
  const Ensemble a = evolve_ensemble(map, Ensemble::from_points(map, init), 200, 11, 1);
  for (unsigned w : {2u, 3u, 5u}) EXPECT_EQ(evolve_ensemble(map, Ensemble::from_points(map, init), 200, 11, w).x, a.x);
}

TEST(Ensemble, MemberMatchesOrbitOnItsStream) {
  const MapSpec map = MapSpec::stochastic_from(quad_sin(1e-3), 0.1);
  const auto init = uniform_box(600, 1, -2, 2, 4);
  const Ensemble e = evolve_ensemble(map, Ensemble::from_points(map, init), 50, 21, 2);
  for (std::size_t i : {0u, 1u, 257u, 599u}) {
    const Orbit o = iterate(map, map.initial_state(init[i]), 50, 0, 50, 21, static_cast<std::uint32_t>(i));
    EXPECT_EQ(e.x[i], o.x.back()) << i;
  }
}

TEST(Ensemble, MomentumAuxiliaryIsCarried) {
  const MapSpec map = MapSpec::heavy_ball(quad_sin(1e-3), 0.01, 0.9);
  const auto init = uniform_box(10, 1, -1, 1, 5);
  const Ensemble e = evolve_ensemble(map, Ensemble::from_points(map, init), 30, 0, 1);
  const Orbit o = iterate(map, init[3], 30);
  EXPECT_EQ(e.member(3).x[0], o.x.back());
  EXPECT_EQ(e.member(3).aux[0], o.aux.back());
}

TEST(Ensemble, UniformBoxIsDeterministicAndInRange) {
  const auto a = uniform_box(500, 2, -0.5, 1.5, 8), b = uniform_box(500, 2, -0.5, 1.5, 8);
  ASSERT_EQ(a.size(), 500u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_GE(a[i][k], -0.5);
      EXPECT_LT(a[i][k], 1.5);
    }
  }
}

TEST(Ensemble, DivergenceNamesTheMember) {
  const MapSpec map = MapSpec::gd(MultiscaleObjective(MacroFunction::quadratic()), 3.0);
  const Ensemble init = Ensemble::from_points(map, {Vec{0.0}, Vec{0.0}, Vec{1.0}});
  try {
    evolve_ensemble(map, init, 100, 0, 1);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.member(), 2);
  }
}
