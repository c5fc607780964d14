#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gdchaos/experiments.hpp"

using namespace gdchaos;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / "gdchaos_experiment_tests" / name;
  std::filesystem::remove_all(p);
  return p;
}

Verdict run_quick(const std::string& id, unsigned workers, const std::string& dir) {
  ExperimentConfig c = default_config(id, Preset::quick);
  c.set("workers", std::to_string(workers));
  return run_experiment(c, RunContext{scratch(dir), nullptr});
}

}  // namespace

TEST(Experiments, RegistryIsComplete) {
  const std::vector<std::string> ids = {"ergodicity-1d", "aperiodic",  "matyas-2d",       "lyapunov-sweep",
                                        "bifurcation",   "momentum",   "escape-dichotomy", "residual-orders"};
  ASSERT_EQ(experiment_registry().size(), ids.size());
  for (const auto& id : ids) EXPECT_EQ(find_experiment(id).id, id);
  EXPECT_THROW(find_experiment("nope"), ConfigError);
}

TEST(Experiments, QuickRunsCoverTheirCriteria) {
  for (const auto& e : experiment_registry()) {
    const Verdict v = run_quick(e.id, 1, e.id);
    EXPECT_FALSE(v.diverged) << e.id;
    EXPECT_FALSE(v.criteria.empty()) << e.id;
    for (const auto& c : v.criteria) EXPECT_TRUE(v.has_metric(c.metric)) << e.id << ": " << c.metric;
    Verdict r = Verdict::from_json(v.to_json());
    r.recompute();
    for (std::size_t i = 0; i < v.criteria.size(); ++i) EXPECT_EQ(r.criteria[i].pass, v.criteria[i].pass);
  }
}

TEST(Experiments, ReproducibleAcrossRunsAndWorkers) {
  for (const std::string id : {"matyas-2d", "escape-dichotomy", "residual-orders"}) {
    const std::string a = run_quick(id, 1, "a").to_json().dump();
    EXPECT_EQ(run_quick(id, 1, "b").to_json().dump(), a) << id;
    EXPECT_EQ(run_quick(id, 3, "c").to_json().dump(), a) << id;
  }
}

TEST(Experiments, SeedChangesStochasticMetrics) {
  ExperimentConfig c = default_config("ergodicity-1d", Preset::quick);
  const Verdict a = run_experiment(c, RunContext{scratch("s1"), nullptr});
  c.set("seed", "43");
  const Verdict b = run_experiment(c, RunContext{scratch("s2"), nullptr});
  EXPECT_NE(a.metric("ks_ensemble_gibbs"), b.metric("ks_ensemble_gibbs"));
}

TEST(Experiments, WritesVerdictAndFigureData) {
  const auto dir = scratch("files");
  ExperimentConfig c = default_config("bifurcation", Preset::quick);
  const RunContext ctx{dir, nullptr};
  const Verdict v = run_experiment(c, ctx);
  write_verdict(v, ctx);
  for (const char* f : {"verdict.json", "timing.json", "bifurcation_points.csv", "bifurcation_summary.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream in(dir / "verdict.json");
  const Json j = Json::parse(in);
  EXPECT_EQ(j["experiment"], "bifurcation");
  EXPECT_EQ(j["parameters"]["epsilon"], "0.001");
  EXPECT_FALSE(j["parameters"].contains("out"));
}

TEST(Experiments, DivergenceBecomesAFailedVerdict) {
  ExperimentConfig c = default_config("momentum", Preset::quick);
  c.set("eta", "2.5");
  c.set("mu", "0.1");
  const Verdict v = run_experiment(c, RunContext{scratch("div"), nullptr});
  EXPECT_TRUE(v.diverged);
  EXPECT_FALSE(v.passed());
  EXPECT_NE(v.error.find("divergence"), std::string::npos);
}

TEST(Experiments, ZeroLearningRateIsRejected) {
  ExperimentConfig c = default_config("ergodicity-1d", Preset::quick);
  c.set("eta", "0");
  EXPECT_THROW(run_experiment(c, RunContext{scratch("zero"), nullptr}), DomainError);
}

TEST(Experiments, OutputNamesStayInsideTheDirectory) {
  const RunContext ctx{scratch("names"), nullptr};
  EXPECT_THROW(ctx.write("../escape.txt", "x"), std::invalid_argument);
  EXPECT_THROW(ctx.write("/tmp/escape.txt", "x"), std::invalid_argument);
  EXPECT_THROW(ctx.write("sub/file.txt", "x"), std::invalid_argument);
  EXPECT_NO_THROW(ctx.write("ok.txt", "x"));
}

TEST(Experiments, DerivedSeedsAreDistinct) {
  EXPECT_NE(derive_seed(42, 1), derive_seed(42, 2));
  EXPECT_NE(derive_seed(42, 1), derive_seed(43, 1));
  EXPECT_EQ(derive_seed(42, 1), derive_seed(42, 1));
}
