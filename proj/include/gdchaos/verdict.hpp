#pragma once

// Experiment verdicts: named metrics plus pass/fail criteria that are pure
// functions of those metrics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gdchaos {

using Json = nlohmann::ordered_json;

enum class CompareOp { le, ge, lt, gt, within, eq };

inline std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::le:
      return "<=";
    case CompareOp::ge:
      return ">=";
    case CompareOp::lt:
      return "<";
    case CompareOp::gt:
      return ">";
    case CompareOp::within:
      return "within";
    case CompareOp::eq:
      return "==";
  }
  return "?";
}

inline CompareOp parse_compare_op(std::string_view s) {
  for (CompareOp op : {CompareOp::le, CompareOp::ge, CompareOp::lt, CompareOp::gt,
                       CompareOp::within, CompareOp::eq})
    if (to_string(op) == s) return op;
  throw std::invalid_argument("unknown comparison '" + std::string(s) + "'");
}

struct Criterion {
  std::string id;
  std::string description;
  std::string metric;
  CompareOp op = CompareOp::le;
  double lo = 0.0;  // threshold, or lower bound for `within`
  double hi = 0.0;  // upper bound for `within`
  bool pass = false;

  bool evaluate(double v) const {
    if (std::isnan(v)) return false;
    switch (op) {
      case CompareOp::le:
        return v <= lo;
      case CompareOp::ge:
        return v >= lo;
      case CompareOp::lt:
        return v < lo;
      case CompareOp::gt:
        return v > lo;
      case CompareOp::within:
        return v >= lo && v <= hi;
      case CompareOp::eq:
        return v == lo;
    }
    return false;
  }
};

struct Verdict {
  std::string experiment;
  std::uint64_t seed = 0;
  /// Parameter echo (key -> canonical value text).
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Criterion> criteria;
  /// Non-fatal conditions worth a reader's attention (inconclusive estimates, ...).
  std::vector<std::string> flags;
  bool diverged = false;
  std::string error;
  /// Wall-clock seconds; kept out of the verdict document so reruns are byte-identical.
  double runtime_seconds = 0.0;

  void add_metric(std::string name, double value) {
    for (auto& [k, v] : metrics)
      if (k == name) {
        v = value;
        return;
      }
    metrics.emplace_back(std::move(name), value);
  }

  double metric(std::string_view name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }

  bool has_metric(std::string_view name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return true;
    return false;
  }

  /// Adds a criterion on an existing metric and evaluates it.
  const Criterion& require(std::string id, std::string description, std::string metric_name,
                           CompareOp op, double lo, double hi = 0.0) {
    Criterion c{std::move(id), std::move(description), std::move(metric_name), op, lo, hi, false};
    c.pass = c.evaluate(metric(c.metric));
    criteria.push_back(std::move(c));
    return criteria.back();
  }

  /// Re-derives every pass flag from the metrics.
  void recompute() {
    for (auto& c : criteria) c.pass = !diverged && c.evaluate(metric(c.metric));
  }

  bool passed() const {
    if (diverged || !error.empty()) return false;
    for (const auto& c : criteria)
      if (!c.pass) return false;
    return true;
  }

  Json to_json() const {
    Json j;
    j["schema"] = "gdchaos.verdict/1";
    j["experiment"] = experiment;
    j["seed"] = seed;
    Json params = Json::object();
    for (const auto& [k, v] : parameters) params[k] = v;
    j["parameters"] = params;
    Json m = Json::object();
    for (const auto& [k, v] : metrics) m[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
    j["metrics"] = m;
    Json cs = Json::array();
    for (const auto& c : criteria) {
      Json cj;
      cj["id"] = c.id;
      cj["description"] = c.description;
      cj["metric"] = c.metric;
      cj["op"] = std::string(to_string(c.op));
      cj["threshold"] = c.lo;
      if (c.op == CompareOp::within) cj["upper"] = c.hi;
      cj["pass"] = c.pass;
      cs.push_back(cj);
    }
    j["criteria"] = cs;
    j["flags"] = flags;
    j["diverged"] = diverged;
    if (!error.empty()) j["error"] = error;
    j["passed"] = passed();
    return j;
  }

  static Verdict from_json(const Json& j) {
    Verdict v;
    v.experiment = j.at("experiment").get<std::string>();
    v.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, val] : j.at("parameters").items()) v.parameters.emplace_back(k, val.get<std::string>());
    for (const auto& [k, val] : j.at("metrics").items())
      v.metrics.emplace_back(k, val.is_null() ? std::numeric_limits<double>::quiet_NaN() : val.get<double>());
    for (const auto& cj : j.at("criteria")) {
      Criterion c;
      c.id = cj.at("id").get<std::string>();
      c.description = cj.at("description").get<std::string>();
      c.metric = cj.at("metric").get<std::string>();
      c.op = parse_compare_op(cj.at("op").get<std::string>());
      c.lo = cj.at("threshold").get<double>();
      if (cj.contains("upper")) c.hi = cj.at("upper").get<double>();
      c.pass = cj.at("pass").get<bool>();
      v.criteria.push_back(std::move(c));
    }
    v.flags = j.at("flags").get<std::vector<std::string>>();
    v.diverged = j.at("diverged").get<bool>();
    if (j.contains("error")) v.error = j.at("error").get<std::string>();
    return v;
  }
};

}  // namespace gdchaos
