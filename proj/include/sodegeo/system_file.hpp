#pragma once

// JSON system definitions: kind "sode", "constrained" or "nonholonomic".
// Syntax errors report line and column, field errors a JSON pointer.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sodegeo/constrained.hpp"
#include "sodegeo/nonholonomic.hpp"
#include "sodegeo/sode.hpp"

namespace sodegeo {

class SystemFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SystemKind { kSode, kConstrained, kNonholonomic };

inline std::string kind_name(SystemKind k) {
  switch (k) {
    case SystemKind::kSode: return "sode";
    case SystemKind::kConstrained: return "constrained";
    case SystemKind::kNonholonomic: return "nonholonomic";
  }
  return "";
}

struct SystemDefinition {
  SystemKind kind = SystemKind::kSode;
  std::string name;
  std::vector<std::string> coords;
  int split = 0;  // number of free coordinates
  std::vector<std::string> F, Psi;
  std::string L;
  std::vector<std::vector<std::vector<std::string>>> upsilon;
  std::vector<std::vector<std::string>> metric;
  std::map<std::string, double> params;
  std::vector<std::vector<double>> points;
  std::uint64_t seed = 0;
  std::map<std::string, std::pair<double, double>> domain;

  std::optional<SodeSystem> sode;
  std::optional<ConstrainedSystem> constrained;
  std::optional<NonholonomicProblem> nonholonomic;

  /// Names of the evaluation-point coordinates.
  std::vector<std::string> point_names() const {
    if (sode) return sode->coordinate_names();
    if (constrained) return constrained->coordinate_names();
    return nonholonomic->coordinate_names();
  }
  std::size_t point_dim() const { return point_names().size(); }

  /// The system the frame modules consume; nonholonomic problems go through
  /// the jet-valued reduction.
  ConstrainedSystem as_constrained() const {
    if (constrained) return *constrained;
    if (nonholonomic) return as_constrained_system(*nonholonomic);
    return ConstrainedSystem::from_sode(*sode);
  }

  std::pair<double, double> range(const std::string& coord) const {
    auto it = domain.find(coord);
    if (it != domain.end()) return it->second;
    return {-1.0, 1.0};
  }

  std::vector<double> sample_point(std::mt19937_64& rng) const {
    std::vector<double> p;
    for (const auto& name : point_names()) {
      auto [lo, hi] = range(name);
      p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    }
    return p;
  }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void field_error(const std::string& source, const std::string& pointer, const std::string& msg) {
  throw SystemFileError(source + ": " + pointer + ": " + msg);
}

inline std::vector<std::string> string_list(const json& doc, const std::string& key, const std::string& source) {
  const auto& v = doc.at(key);
  if (!v.is_array()) field_error(source, "/" + key, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) field_error(source, "/" + key + "/" + std::to_string(i), "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

inline std::vector<std::vector<std::string>> string_matrix(const json& v, const std::string& pointer,
                                                           const std::string& source) {
  if (!v.is_array()) field_error(source, pointer, "expected an array of arrays of strings");
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array()) field_error(source, pointer + "/" + std::to_string(i), "expected an array of strings");
    std::vector<std::string> row;
    for (std::size_t j = 0; j < v[i].size(); ++j) {
      if (!v[i][j].is_string()) {
        field_error(source, pointer + "/" + std::to_string(i) + "/" + std::to_string(j), "expected a string");
      }
      row.push_back(v[i][j].get<std::string>());
    }
    out.push_back(row);
  }
  return out;
}

/// Parses each expression so that syntax errors name their field.
inline void check_expressions(const std::vector<std::string>& exprs, const std::string& pointer,
                              const std::string& source) {
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    try {
      parse(exprs[i]);
    } catch (const ParseError& e) {
      field_error(source, pointer + "/" + std::to_string(i), std::string("cannot parse \"") + exprs[i] + "\": " + e.what());
    }
  }
}

}  // namespace detail

inline SystemDefinition parse_system(const std::string& text, const std::string& source = "<input>") {
  using detail::field_error;
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SystemFileError(source + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) field_error(source, "/", "expected a JSON object");
  static const std::vector<std::string> known{"kind", "name", "coords", "split", "F", "Psi", "L", "Upsilon",
                                              "metric", "params", "points", "seed", "domain", "description"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) field_error(source, "/" + key, "unknown field");
  }
  auto require = [&](const std::string& key) {
    if (!doc.contains(key)) field_error(source, "/" + key, "required field is missing");
  };

  SystemDefinition d;
  require("kind");
  if (!doc["kind"].is_string()) field_error(source, "/kind", "expected a string");
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "sode") d.kind = SystemKind::kSode;
  else if (kind == "constrained") d.kind = SystemKind::kConstrained;
  else if (kind == "nonholonomic") d.kind = SystemKind::kNonholonomic;
  else field_error(source, "/kind", "expected \"sode\", \"constrained\" or \"nonholonomic\", got \"" + kind + "\"");

  if (doc.contains("name")) {
    if (!doc["name"].is_string()) field_error(source, "/name", "expected a string");
    d.name = doc["name"].get<std::string>();
  }
  require("coords");
  d.coords = detail::string_list(doc, "coords", source);
  if (d.coords.empty()) field_error(source, "/coords", "at least one coordinate is required");
  for (std::size_t i = 0; i < d.coords.size(); ++i) {
    const auto& c = d.coords[i];
    if (c == "t" || c.rfind("u_", 0) == 0) {
      field_error(source, "/coords/" + std::to_string(i), "\"" + c + "\" is reserved for time or velocities");
    }
    if (std::count(d.coords.begin(), d.coords.end(), c) > 1) {
      field_error(source, "/coords/" + std::to_string(i), "duplicate coordinate \"" + c + "\"");
    }
  }

  const int n = static_cast<int>(d.coords.size());
  if (d.kind == SystemKind::kSode) {
    if (doc.contains("split")) field_error(source, "/split", "only constrained kinds take a split");
    d.split = n;
  } else {
    require("split");
    if (!doc["split"].is_number_integer()) field_error(source, "/split", "expected an integer");
    d.split = doc["split"].get<int>();
    if (d.split < 1 || d.split > n) {
      field_error(source, "/split", "must be between 1 and the number of coordinates (" + std::to_string(n) + ")");
    }
  }

  if (doc.contains("params")) {
    if (!doc["params"].is_object()) field_error(source, "/params", "expected an object of numbers");
    for (const auto& [key, value] : doc["params"].items()) {
      if (!value.is_number()) field_error(source, "/params/" + key, "expected a number");
      d.params[key] = value.get<double>();
    }
  }

  auto forbid = [&](const std::string& key) {
    if (doc.contains(key)) field_error(source, "/" + key, "not used by kind \"" + kind + "\"");
  };
  if (d.kind == SystemKind::kNonholonomic) {
    forbid("F");
    require("L");
    if (!doc["L"].is_string()) field_error(source, "/L", "expected a string");
    d.L = doc["L"].get<std::string>();
    try {
      parse(d.L);
    } catch (const ParseError& e) {
      field_error(source, "/L", std::string("cannot parse \"") + d.L + "\": " + e.what());
    }
  } else {
    forbid("L");
    require("F");
    d.F = detail::string_list(doc, "F", source);
    detail::check_expressions(d.F, "/F", source);
  }
  if (d.kind == SystemKind::kSode) {
    forbid("Psi");
    forbid("Upsilon");
    forbid("metric");
  } else {
    d.Psi = doc.contains("Psi") ? detail::string_list(doc, "Psi", source) : std::vector<std::string>{};
    detail::check_expressions(d.Psi, "/Psi", source);
    if (doc.contains("Upsilon") && doc.contains("metric")) {
      field_error(source, "/metric", "give either Upsilon or metric, not both");
    }
    if (doc.contains("Upsilon")) {
      const auto& u = doc["Upsilon"];
      if (!u.is_array()) field_error(source, "/Upsilon", "expected a k x k x k array of strings");
      for (std::size_t g = 0; g < u.size(); ++g) {
        d.upsilon.push_back(detail::string_matrix(u[g], "/Upsilon/" + std::to_string(g), source));
      }
    }
    if (doc.contains("metric")) d.metric = detail::string_matrix(doc["metric"], "/metric", source);
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      field_error(source, "/seed", "expected a non-negative integer");
    }
    if (doc["seed"].is_number_integer() && doc["seed"].get<long long>() < 0) {
      field_error(source, "/seed", "expected a non-negative integer");
    }
    d.seed = doc["seed"].get<std::uint64_t>();
  }

  std::vector<std::string> free(d.coords.begin(), d.coords.begin() + d.split);
  std::vector<std::string> constrained(d.coords.begin() + d.split, d.coords.end());
  try {
    switch (d.kind) {
      case SystemKind::kSode: d.sode = SodeSystem::from_expressions(d.coords, d.F, d.params); break;
      case SystemKind::kConstrained:
        d.constrained =
            ConstrainedSystem::from_expressions(free, constrained, d.F, d.Psi, d.params, d.upsilon, d.metric);
        break;
      case SystemKind::kNonholonomic:
        d.nonholonomic =
            NonholonomicProblem::from_expressions(free, constrained, d.L, d.Psi, d.params, d.upsilon, d.metric);
        // Binds the connection data up front so that errors surface here.
        ConstrainedSystem::from_expressions(free, constrained, std::vector<std::string>(free.size(), "0"), d.Psi,
                                            d.params, d.upsilon, d.metric);
        break;
    }
  } catch (const BindError& e) {
    field_error(source, "/", std::string("expression refers to an unknown name: ") + e.what());
  } catch (const std::invalid_argument& e) {
    field_error(source, "/", e.what());
  }

  const auto names = d.point_names();
  if (doc.contains("domain")) {
    if (!doc["domain"].is_object()) field_error(source, "/domain", "expected an object of [lo, hi] ranges");
    for (const auto& [key, value] : doc["domain"].items()) {
      if (std::find(names.begin(), names.end(), key) == names.end()) {
        field_error(source, "/domain/" + key, "not a coordinate of the evaluation space");
      }
      if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        field_error(source, "/domain/" + key, "expected [lo, hi]");
      }
      double lo = value[0].get<double>(), hi = value[1].get<double>();
      if (!(lo < hi)) field_error(source, "/domain/" + key, "lower bound must be below upper bound");
      d.domain[key] = {lo, hi};
    }
  }
  if (doc.contains("points")) {
    const auto& pts = doc["points"];
    if (!pts.is_array()) field_error(source, "/points", "expected an array of coordinate tuples");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string ptr = "/points/" + std::to_string(i);
      if (!pts[i].is_array()) field_error(source, ptr, "expected an array of numbers");
      if (pts[i].size() != names.size()) {
        field_error(source, ptr, "expected " + std::to_string(names.size()) + " coordinates (t, positions, free velocities), got " +
                                     std::to_string(pts[i].size()));
      }
      std::vector<double> p;
      for (std::size_t j = 0; j < pts[i].size(); ++j) {
        if (!pts[i][j].is_number()) field_error(source, ptr + "/" + std::to_string(j), "expected a number");
        p.push_back(pts[i][j].get<double>());
      }
      d.points.push_back(p);
    }
  }
  return d;
}

inline SystemDefinition load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SystemFileError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system(ss.str(), path);
}

}  // namespace sodegeo
