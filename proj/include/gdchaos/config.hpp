#pragma once

// Experiment configuration: a flat "key = value" document.
//
//   # comment
//   schema_version = 1
//   experiment = ergodicity-1d
//   eta = 0.1
//   eta_list = 0.2, 0.1, 0.05
//   tol.ks = 0.05
//
// Every experiment declares its keys with types and defaults; unknown keys
// are rejected. Values are stored in canonical text form, so serialising and
// re-parsing a config reproduces it exactly.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gdchaos {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamType { real, integer, text, real_list };

struct ParamSpec {
  std::string key;
  ParamType type;
  std::string full;   // default of the full-size run
  std::string quick;  // default of the quick preset; empty = same as full
  std::string doc;
};

enum class Preset { full, quick };

inline Preset parse_preset(std::string_view s) {
  if (s == "full") return Preset::full;
  if (s == "quick") return Preset::quick;
  throw ConfigError("unknown preset '" + std::string(s) + "' (expected full or quick)");
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_real(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_real(std::string_view s, std::string_view key) {
  double v = 0.0;
  const std::string t = trim(s);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size())
    throw ConfigError("key '" + std::string(key) + "': '" + t + "' is not a number");
  return v;
}

inline std::int64_t parse_integer(std::string_view s, std::string_view key) {
  const std::string t = trim(s);
  std::int64_t v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (!t.empty() && r.ec == std::errc{} && r.ptr == t.data() + t.size()) return v;
  // Accept exact scientific forms such as 1e7.
  const double d = parse_real(t, key);
  if (d != static_cast<double>(static_cast<std::int64_t>(d)))
    throw ConfigError("key '" + std::string(key) + "': '" + t + "' is not an integer");
  return static_cast<std::int64_t>(d);
}

inline std::vector<double> parse_real_list(std::string_view s, std::string_view key) {
  std::vector<double> out;
  std::string item;
  std::istringstream is{std::string(s)};
  while (std::getline(is, item, ',')) out.push_back(parse_real(item, key));
  if (out.empty()) throw ConfigError("key '" + std::string(key) + "': empty list");
  return out;
}

}  // namespace detail

/// Canonical text of a value of the given type.
inline std::string canonical_value(ParamType type, std::string_view raw, std::string_view key) {
  switch (type) {
    case ParamType::real:
      return detail::format_real(detail::parse_real(raw, key));
    case ParamType::integer:
      return std::to_string(detail::parse_integer(raw, key));
    case ParamType::text: {
      std::string t = detail::trim(raw);
      if (t.empty()) throw ConfigError("key '" + std::string(key) + "': empty value");
      return t;
    }
    case ParamType::real_list: {
      std::string out;
      for (double v : detail::parse_real_list(raw, key)) {
        if (!out.empty()) out += ", ";
        out += detail::format_real(v);
      }
      return out;
    }
  }
  return std::string(raw);
}

class ExperimentConfig {
 public:
  ExperimentConfig() = default;
  ExperimentConfig(std::string experiment, std::vector<ParamSpec> schema, Preset preset)
      : experiment_(std::move(experiment)), schema_(std::move(schema)) {
    for (const auto& p : schema_) {
      const std::string& d = (preset == Preset::quick && !p.quick.empty()) ? p.quick : p.full;
      values_[p.key] = canonical_value(p.type, d, p.key);
    }
  }

  const std::string& experiment() const { return experiment_; }
  const std::vector<ParamSpec>& schema() const { return schema_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  /// Sets a value, validating the key and its type. Returns the previous text.
  std::string set(std::string_view key, std::string_view raw) {
    const ParamSpec* p = find(key);
    if (!p) throw ConfigError("unknown key '" + std::string(key) + "' for experiment " + experiment_);
    std::string& slot = values_[p->key];
    std::string old = slot;
    slot = canonical_value(p->type, raw, key);
    return old;
  }

  const std::string& text(std::string_view key) const { return at(key); }
  double real(std::string_view key) const { return detail::parse_real(at(key), key); }
  std::int64_t integer(std::string_view key) const { return detail::parse_integer(at(key), key); }
  std::uint64_t count(std::string_view key) const {
    const auto v = integer(key);
    if (v < 0) throw ConfigError("key '" + std::string(key) + "' must be nonnegative");
    return static_cast<std::uint64_t>(v);
  }
  std::vector<double> reals(std::string_view key) const { return detail::parse_real_list(at(key), key); }

  /// Document with every key in schema order.
  std::string serialize() const {
    std::ostringstream os;
    os << "schema_version = " << kConfigSchemaVersion << '\n';
    os << "experiment = " << experiment_ << '\n';
    for (const auto& p : schema_) os << p.key << " = " << values_.at(p.key) << '\n';
    return os.str();
  }

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.experiment_ == b.experiment_ && a.values_ == b.values_;
  }

 private:
  const ParamSpec* find(std::string_view key) const {
    for (const auto& p : schema_)
      if (p.key == key) return &p;
    return nullptr;
  }
  const std::string& at(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) throw ConfigError("missing key '" + std::string(key) + "'");
    return it->second;
  }

  std::string experiment_;
  std::vector<ParamSpec> schema_;
  std::map<std::string, std::string> values_;
};

/// Raw key/value pairs of a document, in order, with line numbers.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

inline std::vector<ConfigEntry> parse_config_entries(std::istream& is) {
  std::vector<ConfigEntry> out;
  std::string line;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(no) + ": expected 'key = value'");
    ConfigEntry e{detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)), no};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(no) + ": empty key");
    for (const auto& prev : out)
      if (prev.key == e.key)
        throw ConfigError("line " + std::to_string(no) + ": duplicate key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace gdchaos
