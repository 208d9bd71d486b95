#pragma once

// Flat key=value run configuration. '#' starts a comment, blank lines are
// skipped, unknown keys are rejected up front so a typo cannot silently fall
// back to a default. Command-line flags are applied on top of the file via
// set(), so a flag always wins over the file value.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace topodyn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "K",            "p",
      "epsilon",      "d0",
      "T",            "N",
      "steps",        "landmarks",
      "seed",         "threads",
      "lift",         "graph_policy",
      "out",          "calibration",
      "R0",           "macro_steps",
      "spacing_min",  "spacing_max",
      "spacing_knots","calibration_reps",
      "eps_grid",     "d0_grid",
      "r_grid_points","r_lo",
      "r_hi",
      "theta0",       "cooling",
      "plateau",      "anneal_tol",
      "anneal_max_iter", "anneal_restarts",
  };
  return keys;
}

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace config_detail

class ConfigMap {
 public:
  void set(const std::string& key, const std::string& value) {
    if (known_config_keys().count(key) == 0)
      throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  static ConfigMap parse(std::istream& is) {
    ConfigMap cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = config_detail::trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
      std::string key = config_detail::trim(line.substr(0, eq));
      std::string val = config_detail::trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      cfg.set(key, val);
    }
    return cfg;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  long long get_int(const std::string& key, long long fallback, long long lo,
                    long long hi) const {
    auto it = values_.find(key);
    long long v = it == values_.end() ? fallback : parse_ll(key, it->second);
    check_range(key, static_cast<double>(v), static_cast<double>(lo),
                static_cast<double>(hi), true, true);
    return v;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    try {
      std::size_t pos = 0;
      std::uint64_t v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected unsigned integer, got '" + s + "'");
    }
  }

  // lo_open / hi_open select strict inequality at that end.
  double get_double(const std::string& key, double fallback, double lo, double hi,
                    bool lo_open = false, bool hi_open = false) const {
    auto it = values_.find(key);
    double v = it == values_.end() ? fallback : parse_d(key, it->second);
    check_range(key, v, lo, hi, !lo_open, !hi_open);
    return v;
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::string cur;
    std::stringstream ss(it->second);
    while (std::getline(ss, cur, ',')) {
      cur = config_detail::trim(cur);
      if (cur.empty()) continue;
      out.push_back(parse_d(key, cur));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  static long long parse_ll(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      long long v = std::stoll(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected integer, got '" + s + "'");
    }
  }

  static double parse_d(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected number, got '" + s + "'");
    }
  }

  static void check_range(const std::string& key, double v, double lo, double hi,
                          bool lo_closed, bool hi_closed) {
    bool ok_lo = lo_closed ? v >= lo : v > lo;
    bool ok_hi = hi_closed ? v <= hi : v < hi;
    if (!ok_lo || !ok_hi) {
      std::ostringstream os;
      os << "key '" << key << "': value " << v << " outside " << (lo_closed ? '[' : '(')
         << lo << ", " << hi << (hi_closed ? ']' : ')');
      throw ConfigError(os.str());
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace topodyn
