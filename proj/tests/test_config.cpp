#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gdchaos/experiments.hpp"

using namespace gdchaos;

TEST(Config, EverySchemaRoundTrips) {
  for (const auto& e : experiment_registry())
    for (Preset p : {Preset::full, Preset::quick}) {
      const ExperimentConfig a = default_config(e.id, p);
      const ExperimentConfig b = parse_config(a.serialize(), p);
      EXPECT_EQ(a, b) << e.id;
      EXPECT_EQ(a.serialize(), b.serialize());
    }
}

TEST(Config, CanonicalValues) {
  ExperimentConfig c = default_config("ergodicity-1d");
  c.set("eta", " 1e-1 ");
  EXPECT_EQ(c.text("eta"), "0.1");
  c.set("orbit_steps", "1e7");
  EXPECT_EQ(c.count("orbit_steps"), 10000000u);
  EXPECT_EQ(c.set("seed", "7"), "42");
  EXPECT_THROW(c.set("orbit_steps", "1.5"), ConfigError);
  EXPECT_THROW(c.set("eta", "fast"), ConfigError);
  EXPECT_THROW(c.set("etaa", "0.1"), ConfigError);
  ExperimentConfig l = default_config("residual-orders");
  l.set("eta_list", "0.4,0.2 , 1e-1");
  EXPECT_EQ(l.text("eta_list"), "0.4, 0.2, 0.1");
  EXPECT_EQ(l.reals("eta_list").size(), 3u);
}

TEST(Config, DocumentParsing) {
  const std::string doc =
      "# ergodicity run\n"
      "schema_version = 1\n"
      "experiment = ergodicity-1d\n"
      "\n"
      "eta = 0.05\n"
      "tol.ks = 0.04\n";
  const ExperimentConfig c = parse_config(doc, Preset::quick);
  EXPECT_EQ(c.real("eta"), 0.05);
  EXPECT_EQ(c.real("tol.ks"), 0.04);
  EXPECT_EQ(c.count("ensemble_size"), 4000u);
}

TEST(Config, DocumentErrors) {
  EXPECT_THROW(parse_config("experiment = bifurcation\n"), ConfigError);
  EXPECT_THROW(parse_config("schema_version = 2\nexperiment = bifurcation\n"), ConfigError);
  EXPECT_THROW(parse_config("schema_version = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("schema_version = 1\nexperiment = nope\n"), ConfigError);
  EXPECT_THROW(parse_config("schema_version = 1\nexperiment = bifurcation\nwhat = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("schema_version = 1\nexperiment = bifurcation\nepsilon = 1\nepsilon = 2\n"),
               ConfigError);
  EXPECT_THROW(parse_config("schema_version = 1\nexperiment = bifurcation\nno equals sign\n"), ConfigError);
  std::istringstream is("schema_version = 1\nexperiment = bifurcation\n");
  EXPECT_THROW(parse_config(is, Preset::full, "momentum"), ConfigError);
}

TEST(Verdict, CriteriaFollowMetrics) {
  Verdict v;
  v.add_metric("a", 1.0);
  v.add_metric("b", NAN);
  v.require("A", "a small", "a", CompareOp::le, 2.0);
  v.require("B", "b present", "b", CompareOp::ge, 0.0);
  v.require("C", "missing", "zzz", CompareOp::le, 1.0);
  v.require("D", "window", "a", CompareOp::within, 0.5, 1.5);
  EXPECT_TRUE(v.criteria[0].pass);
  EXPECT_FALSE(v.criteria[1].pass);
  EXPECT_FALSE(v.criteria[2].pass);
  EXPECT_TRUE(v.criteria[3].pass);
  EXPECT_FALSE(v.passed());
  v.add_metric("a", 3.0);
  v.recompute();
  EXPECT_FALSE(v.criteria[0].pass);
  EXPECT_FALSE(v.criteria[3].pass);
}

TEST(Verdict, JsonRoundTrip) {
  Verdict v;
  v.experiment = "x";
  v.seed = 9;
  v.parameters = {{"eta", "0.1"}};
  v.add_metric("m", 0.25);
  v.add_metric("nan", NAN);
  v.require("A", "desc", "m", CompareOp::within, 0.0, 1.0);
  v.flags.push_back("note");
  v.runtime_seconds = 12.5;
  const Json j = v.to_json();
  EXPECT_TRUE(j["metrics"]["nan"].is_null());
  EXPECT_FALSE(j.contains("runtime_seconds"));
  const Verdict w = Verdict::from_json(j);
  EXPECT_EQ(w.to_json().dump(), j.dump());
  EXPECT_TRUE(std::isnan(w.metric("nan")));
}

TEST(Verdict, DivergedNeverPasses) {
  Verdict v;
  v.add_metric("a", 0.0);
  v.require("A", "", "a", CompareOp::eq, 0.0);
  EXPECT_TRUE(v.passed());
  v.diverged = true;
  EXPECT_FALSE(v.passed());
  v.recompute();
  EXPECT_FALSE(v.criteria[0].pass);
}
