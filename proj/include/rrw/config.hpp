#pragma once

// JSON experiment configs: measure and law specs, parameter lookup with
// defaults recorded back into the config.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "rrw/families.hpp"
#include "rrw/measures.hpp"

namespace rrw {

using json = nlohmann::json;

// Accepts a number or a "p/q" string.
inline double parse_probability(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return std::stod(s);
      return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("probability must be a number or a \"p/q\" string, got " + v.dump());
}

inline std::int64_t parse_atom_key(const std::string& k) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(k, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != k.size() || k.empty()) throw ConfigError("atom position '" + k + "' is not an integer");
  return v;
}

inline Measure1D parse_measure(const json& spec);

inline std::int64_t int_field(const json& spec, const char* key, std::int64_t def) {
  if (!spec.contains(key)) return def;
  if (!spec[key].is_number_integer()) throw ConfigError(std::string("field '") + key + "' must be an integer");
  return spec[key].get<std::int64_t>();
}

inline double num_field(const json& spec, const char* key) {
  if (!spec.contains(key) || !spec[key].is_number())
    throw ConfigError(std::string("field '") + key + "' must be a number");
  return spec[key].get<double>();
}

// {"atoms": {"1": 0.5, "2": 0.5}} | {"atoms": [[1, 0.5], [2, 0.5]]}
// {"family": "dirac" | "uniform" | "power_tail" | "log_tail" | "subordinated" | "truncate", ...}
inline Measure1D parse_measure(const json& spec) {
  if (!spec.is_object()) throw ConfigError("measure spec must be an object");
  if (spec.contains("atoms")) {
    std::map<std::int64_t, double> atoms;
    const json& a = spec["atoms"];
    if (a.is_object()) {
      for (auto it = a.begin(); it != a.end(); ++it) atoms[parse_atom_key(it.key())] += parse_probability(it.value());
    } else if (a.is_array()) {
      for (const auto& e : a) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer())
          throw ConfigError("atom list entries must be [integer, probability]");
        atoms[e[0].get<std::int64_t>()] += parse_probability(e[1]);
      }
    } else {
      throw ConfigError("'atoms' must be an object or a list");
    }
    if (atoms.empty()) throw ConfigError("'atoms' is empty");
    return Measure1D::lattice(atoms);
  }
  if (!spec.contains("family") || !spec["family"].is_string())
    throw ConfigError("measure spec needs 'atoms' or 'family'");
  const std::string f = spec["family"].get<std::string>();
  if (f == "dirac") return dirac(int_field(spec, "at", 0));
  if (f == "uniform") return uniform(num_field(spec, "a"), num_field(spec, "b"));
  if (f == "power_tail") return power_tail(num_field(spec, "beta"), int_field(spec, "cutoff", kDefaultCutoff));
  if (f == "log_tail") return wiener_hopf_log_tail(int_field(spec, "cutoff", kDefaultCutoff));
  if (f == "subordinated") return subordinated(num_field(spec, "alpha"), int_field(spec, "cutoff", 1024));
  if (f == "truncate") {
    if (!spec.contains("of")) throw ConfigError("truncate needs 'of'");
    return truncate(parse_measure(spec["of"]), int_field(spec, "at", 0));
  }
  throw ConfigError("unknown measure family '" + f + "'");
}

inline Dims parse_dims(const json& v) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("'dims' must be [r1, r2, s1, s2]");
  for (const auto& e : v)
    if (!e.is_number_integer() || e.get<int>() < 0) throw ConfigError("'dims' entries must be integers >= 0");
  return Dims{v[0].get<int>(), v[1].get<int>(), v[2].get<int>(), v[3].get<int>()};
}

// {"dims": [...], "points": [[...], ...], "probs": [...]}
// {"dims": [...], "factors": [measure, ...]}
inline JointMeasure parse_law(const json& spec) {
  if (!spec.is_object()) throw ConfigError("law spec must be an object");
  if (!spec.contains("dims")) throw ConfigError("law spec needs 'dims'");
  const Dims d = parse_dims(spec["dims"]);
  if (spec.contains("factors")) {
    std::vector<Measure1D> fs;
    for (const auto& f : spec["factors"]) fs.push_back(parse_measure(f));
    return JointMeasure::product(d, std::move(fs));
  }
  if (!spec.contains("points") || !spec.contains("probs")) throw ConfigError("law spec needs 'factors' or 'points' + 'probs'");
  std::vector<Point> pts;
  std::vector<double> probs;
  for (const auto& p : spec["points"]) {
    if (!p.is_array()) throw ConfigError("each point must be a list of numbers");
    Point x;
    for (const auto& c : p) {
      if (!c.is_number()) throw ConfigError("point coordinates must be numbers");
      x.push_back(c.get<double>());
    }
    pts.push_back(std::move(x));
  }
  for (const auto& p : spec["probs"]) probs.push_back(parse_probability(p));
  return JointMeasure::finite(d, std::move(pts), std::move(probs));
}

// Config root: uses "law" when present, else "measure" as a 1-D reflected law.
inline JointMeasure law_from_config(const json& cfg) {
  if (cfg.contains("law")) return parse_law(cfg["law"]);
  if (cfg.contains("measure")) return JointMeasure::single(parse_measure(cfg["measure"]));
  throw ConfigError("config needs a 'law' or a 'measure'");
}

inline Measure1D measure_from_config(const json& cfg) {
  if (cfg.contains("measure")) return parse_measure(cfg["measure"]);
  throw ConfigError("this command needs a one-dimensional 'measure'");
}

// Parameter section with defaults written back, so the echoed config is
// complete.
class Params {
 public:
  explicit Params(json& section) : s_(section) {
    if (s_.is_null()) s_ = json::object();
    if (!s_.is_object()) throw ConfigError("parameter section must be an object");
  }

  template <class T>
  T get(const std::string& key, const T& def) {
    if (!s_.contains(key)) s_[key] = def;
    try {
      return s_[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError("parameter '" + key + "' has the wrong type: " + s_[key].dump());
    }
  }

  template <class T>
  T require_key(const std::string& key) {
    if (!s_.contains(key)) throw ConfigError("missing parameter '" + key + "'");
    try {
      return s_[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError("parameter '" + key + "' has the wrong type: " + s_[key].dump());
    }
  }

  bool has(const std::string& key) const { return s_.contains(key); }
  json& raw() { return s_; }

 private:
  json& s_;
};

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    json j = json::parse(in, nullptr, true, true);
    // A metadata file carries its config under "config".
    if (j.contains("schema") && j["schema"] == "rrw-metadata") {
      json cfg = j["config"];
      if (!cfg.contains("command") && j.contains("command")) cfg["command"] = j["command"];
      return cfg;
    }
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace rrw
