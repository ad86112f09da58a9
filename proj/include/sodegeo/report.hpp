#pragma once

// JSON serialization of frames, tables, spectra and reductions, plus a flat
// CSV view of any report fragment.

#include <cmath>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sodegeo/constrained.hpp"
#include "sodegeo/nonholonomic.hpp"
#include "sodegeo/sode.hpp"

namespace sodegeo::report {

using nlohmann::json;

/// Non-finite numbers have no JSON representation; they become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json vector_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    a.push_back(row);
  }
  return a;
}

inline json jet_vector(const std::vector<Jet>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(number(x.value()));
  return a;
}

inline json jet_matrix(const Matrix<Jet>& m) {
  json a = json::array();
  for (const auto& row : m) a.push_back(jet_vector(row));
  return a;
}

inline json jet_tensor(const std::vector<Matrix<Jet>>& t) {
  json a = json::array();
  for (const auto& m : t) a.push_back(jet_matrix(m));
  return a;
}

/// table[A][B] as adapted-frame components [A][B][C].
inline json frame_table(const AdaptedBasis& basis, const std::vector<std::vector<VectorGerm>>& table) {
  json a = json::array();
  for (const auto& row : table) {
    json r = json::array();
    for (const auto& v : row) r.push_back(vector_json(basis.component_values(v)));
    a.push_back(r);
  }
  return a;
}

inline json residuals_json(const ResidualMap& m) {
  json o = json::object();
  for (const auto& [k, v] : m) o[k] = number(v);
  return o;
}

struct TensorSelection {
  std::set<std::string> names;
  bool has(const std::string& n) const { return names.count(n) > 0; }
};

inline const std::vector<std::string>& known_tensors() {
  static const std::vector<std::string> k{"phi", "K", "curvature", "torsion", "shape", "connection"};
  return k;
}

inline json unconstrained_tensors(const UnconstrainedFrame& f, const TensorSelection& sel) {
  json o = json::object();
  AdaptedBasis basis = f.basis();
  o["basis"] = basis.labels;
  if (sel.has("phi")) o["Phi"] = jet_matrix(f.Phi);
  if (sel.has("K")) o["K"] = json::array();
  if (sel.has("curvature")) o["R"] = jet_tensor(f.R);
  if (sel.has("connection")) {
    o["nonlinear_connection"] = jet_matrix(f.G);
    o["connection"] = frame_table(basis, mp_components(f));
  }
  if (sel.has("torsion")) o["torsion"] = frame_table(basis, mp_torsion_table(f));
  if (sel.has("shape")) {
    ShapeAnalysis s = mp_shape(f);
    json pairs = json::array();
    for (const auto& e : s.eigenpairs) {
      pairs.push_back({{"mu", number(e.mu)}, {"frame_components", vector_json(e.frame_components)},
                       {"coordinates", vector_json(e.coordinates)}});
    }
    o["shape"] = {{"matrix", matrix_json(s.A)}, {"eigenpairs", pairs}, {"notes", s.notes}};
  }
  return o;
}

inline json roots_json(const ConstrainedShape& s) {
  json clusters = json::array();
  std::vector<double> nonzero;
  for (const auto& [root, mult] : cluster(s.real_roots)) {
    clusters.push_back({{"root", number(root)}, {"multiplicity", mult}});
    if (std::abs(root) > 1e-6) nonzero.push_back(root);
  }
  return {{"polynomial", vector_json(s.polynomial)},
          {"real_roots", vector_json(s.real_roots)},
          {"clusters", clusters},
          {"zero_root_multiplicity", s.zero_root_multiplicity},
          {"nonzero_real_roots", vector_json(nonzero)}};
}

inline json constrained_shape_json(const ConstrainedShape& s) {
  json spaces = json::array();
  for (const auto& e : s.eigenspaces) {
    json vecs = json::array();
    for (Eigen::Index c = 0; c < e.frame_vectors.cols(); ++c) {
      std::vector<double> col(e.frame_vectors.col(c).data(), e.frame_vectors.col(c).data() + e.frame_vectors.rows());
      vecs.push_back(vector_json(col));
    }
    spaces.push_back({{"mu", number(e.mu)},
                      {"multiplicity", e.multiplicity},
                      {"dimension", e.frame_vectors.cols()},
                      {"frame_vectors", vecs},
                      {"equation_residual", number(e.equation_residual)}});
  }
  json decoupling = json::array();
  for (const auto& d : s.decoupling) {
    decoupling.push_back({{"alpha", d.alpha},
                          {"shape_of_gamma", number(d.shape_of_gamma)},
                          {"coefficient_size", number(d.coefficient_size)},
                          {"shape_of_horizontal", number(d.shape_of_horizontal)},
                          {"shape_vanishes", d.shape_vanishes},
                          {"coefficients_vanish", d.coefficients_vanish}});
  }
  json o = roots_json(s);
  o["matrix"] = matrix_json(s.A);
  o["eigenspaces"] = spaces;
  o["decoupling"] = decoupling;
  return o;
}

inline json constrained_tensors(const ConstrainedFrame& f, const TensorSelection& sel) {
  json o = json::object();
  AdaptedBasis basis = f.basis();
  o["basis"] = basis.labels;
  if (sel.has("phi")) o["Phi"] = jet_matrix(f.Phi);
  if (sel.has("K")) o["K"] = jet_matrix(f.K);
  if (sel.has("curvature")) {
    o["Rhat"] = jet_tensor(f.Rhat);
    o["Rcheck"] = jet_tensor(f.Rcheck);
  }
  if (sel.has("connection")) {
    o["nonlinear_connection"] = jet_matrix(f.G);
    o["constraint_derivatives"] = jet_matrix(f.P);
    json ups = json::array();
    for (int g = 0; g < f.k; ++g) {
      json plane = json::array();
      for (int a = 0; a < f.k; ++a) {
        json row = json::array();
        for (int b = 0; b < f.k; ++b) row.push_back(number(f.ups(g, a, b).value()));
        plane.push_back(row);
      }
      ups.push_back(plane);
    }
    o["Upsilon"] = ups;
    o["connection"] = frame_table(basis, constrained_components(f));
  }
  if (sel.has("torsion")) o["torsion"] = frame_table(basis, constrained_torsion_table(f));
  if (sel.has("shape")) o["shape"] = constrained_shape_json(constrained_shape(f));
  return o;
}

inline json reduction_json(const Reduction& r) {
  return {{"F", vector_json(r.F)},
          {"G", vector_json(r.G)},
          {"lambda", vector_json(r.lambda)},
          {"constrained_velocity", vector_json(r.constrained_velocity)},
          {"C", matrix_json(r.C)},
          {"W", matrix_json(r.W)},
          {"condition", number(r.condition)},
          {"hessian_positive_definite", r.hessian_positive_definite},
          {"mass_positive_definite", r.mass_positive_definite},
          {"residuals",
           {{"reduction.linear_part", number(r.linear_part_residual)},
            {"reduction.equations", number(r.equation_residual)}}}};
}

/// Rows (path, value) for every scalar leaf, array indices in brackets.
inline void flatten(const json& j, const std::string& path, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, path.empty() ? k : path + "." + k, rows);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "[" + std::to_string(i) + "]", rows);
  } else if (j.is_number() || j.is_boolean() || j.is_null()) {
    rows.emplace_back(path, j.dump());
  }
}

/// One row per numeric leaf of every point: point,quantity,value.
inline void write_csv(std::ostream& out, const json& points) {
  out << "point,quantity,value\n";
  for (const auto& p : points) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [k, v] : p.items()) {
      if (k == "index") continue;
      flatten(v, k, rows);
    }
    for (const auto& [q, v] : rows) out << p.value("index", 0) << "," << q << "," << v << "\n";
  }
}

}  // namespace sodegeo::report
