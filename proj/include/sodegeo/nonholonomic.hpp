#pragma once

// Nonholonomic reduction: from a Lagrangian L(t, x^i, u^i) and constraints
// u^alpha = Psi^alpha(t, x^b, x^beta, u^b), the Chetaev equations
//     EL_a + EL_alpha dPsi^alpha/du^a = 0,   lambda_alpha = EL_alpha,
// with EL_i = d/dt(dL/du^i) - dL/dx^i, are solved for the free accelerations
// x''^a = F^a. Everything is templated on the scalar type so that jets flow
// through the linear solve and the result feeds build_constrained_frame.

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sodegeo/constrained.hpp"
#include "sodegeo/expr.hpp"
#include "sodegeo/linalg.hpp"

namespace sodegeo {

struct NonholonomicProblem {
  int m = 0;
  int k = 0;
  std::vector<std::string> free_coords;
  std::vector<std::string> constrained_coords;
  std::map<std::string, double> params;
  std::vector<std::string> psi_sources;
  std::vector<std::vector<std::vector<std::string>>> upsilon;
  std::vector<std::vector<std::string>> metric;
  BoundExpr L;                // over (t, x^1..x^n, u^1..u^n)
  std::vector<BoundExpr> Psi;  // over (t, x^a, x^alpha, u^a)

  int n() const { return m + k; }
  int dim() const { return n() + m + 1; }
  int full_dim() const { return 2 * n() + 1; }

  /// Free coordinates come first in the full coordinate list.
  static NonholonomicProblem from_expressions(const std::vector<std::string>& free,
                                              const std::vector<std::string>& constrained, const std::string& L,
                                              const std::vector<std::string>& Psi,
                                              const std::map<std::string, double>& params = {},
                                              const std::vector<std::vector<std::vector<std::string>>>& upsilon = {},
                                              const std::vector<std::vector<std::string>>& metric = {}) {
    if (free.empty()) throw std::invalid_argument("a nonholonomic problem needs at least one free coordinate");
    if (Psi.size() != constrained.size()) {
      throw std::invalid_argument("expected " + std::to_string(constrained.size()) + " expressions for Psi, got " +
                                  std::to_string(Psi.size()));
    }
    NonholonomicProblem p;
    p.m = static_cast<int>(free.size());
    p.k = static_cast<int>(constrained.size());
    p.free_coords = free;
    p.constrained_coords = constrained;
    p.params = params;
    p.psi_sources = Psi;
    p.upsilon = upsilon;
    p.metric = metric;
    std::vector<std::string> all = free;
    all.insert(all.end(), constrained.begin(), constrained.end());
    p.L = BoundExpr(parse(L), evolution_slots(all), params);
    p.Psi = bind_all(Psi, constrained_slots(free, constrained), params);
    return p;
  }

  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names{"t"};
    for (const auto& c : free_coords) names.push_back(c);
    for (const auto& c : constrained_coords) names.push_back(c);
    for (const auto& c : free_coords) names.push_back("u_" + c);
    return names;
  }
};

/// Ingredients of the Euler-Lagrange operators at a constrained point:
/// EL_i = A_i + W_ij x''^j with x''^alpha = c^alpha + dPsi^alpha_b x''^b.
template <class S>
struct LagrangeData {
  std::vector<S> full;  // (t, x^i, u^i) with u^alpha = Psi^alpha
  std::vector<S> A;
  Matrix<S> W;
  std::vector<S> c;
  Matrix<S> dPsi;  // dPsi[alpha][b] = dPsi^alpha / du^b
};

namespace detail {

template <class S>
S second_partial(const BasicJet<S>& f, int i, int j) {
  std::vector<int> e(static_cast<std::size_t>(f.nvars()), 0);
  ++e[static_cast<std::size_t>(i)];
  ++e[static_cast<std::size_t>(j)];
  return f.partial(std::span<const int>(e));
}

template <class S>
std::vector<BasicJet<S>> seed(std::span<const S> values, int order) {
  std::vector<BasicJet<S>> out;
  const int nv = static_cast<int>(values.size());
  for (int i = 0; i < nv; ++i) out.push_back(BasicJet<S>::variable(i, values[static_cast<std::size_t>(i)], nv, order));
  return out;
}

}  // namespace detail

/// Second-order jet of L at a full point (t, x^i, u^i).
template <class S>
BasicJet<S> lagrangian_jet(const NonholonomicProblem& prob, std::span<const S> full) {
  if (static_cast<int>(full.size()) != prob.full_dim()) {
    throw std::invalid_argument("full point must have " + std::to_string(prob.full_dim()) + " coordinates, got " +
                                std::to_string(full.size()));
  }
  auto args = detail::seed(full, 2);
  return prob.L.eval(std::span<const BasicJet<S>>(args));
}

template <class S>
LagrangeData<S> lagrange_data(const NonholonomicProblem& prob, std::span<const S> z) {
  const int n = prob.n(), m = prob.m, k = prob.k;
  if (static_cast<int>(z.size()) != prob.dim()) {
    throw std::invalid_argument("point must have " + std::to_string(prob.dim()) + " coordinates, got " +
                                std::to_string(z.size()));
  }
  LagrangeData<S> d;
  auto zj = detail::seed(z, 1);
  std::vector<BasicJet<S>> psi;
  for (const auto& b : prob.Psi) psi.push_back(b.eval(std::span<const BasicJet<S>>(zj)));

  d.full.assign(z.begin(), z.begin() + 1 + n + m);
  for (int al = 0; al < k; ++al) d.full.push_back(psi[static_cast<std::size_t>(al)].value());

  // u^j at the point, all n of them.
  auto vel = [&](int j) { return d.full[static_cast<std::size_t>(1 + n + j)]; };
  d.c.assign(static_cast<std::size_t>(k), S(0.0));
  d.dPsi.assign(static_cast<std::size_t>(k), std::vector<S>(static_cast<std::size_t>(m), S(0.0)));
  for (int al = 0; al < k; ++al) {
    const auto& p = psi[static_cast<std::size_t>(al)];
    S c = p.gradient(0);
    for (int j = 0; j < n; ++j) c += vel(j) * p.gradient(1 + j);
    d.c[static_cast<std::size_t>(al)] = c;
    for (int b = 0; b < m; ++b) d.dPsi[static_cast<std::size_t>(al)][static_cast<std::size_t>(b)] = p.gradient(1 + n + b);
  }

  BasicJet<S> lj = lagrangian_jet<S>(prob, std::span<const S>(d.full));
  auto X = [](int i) { return 1 + i; };
  auto U = [n](int i) { return 1 + n + i; };
  d.A.assign(static_cast<std::size_t>(n), S(0.0));
  d.W.assign(static_cast<std::size_t>(n), std::vector<S>(static_cast<std::size_t>(n), S(0.0)));
  for (int i = 0; i < n; ++i) {
    S a = detail::second_partial(lj, 0, U(i)) - lj.gradient(X(i));
    for (int j = 0; j < n; ++j) a += vel(j) * detail::second_partial(lj, X(j), U(i));
    d.A[static_cast<std::size_t>(i)] = a;
    for (int j = 0; j < n; ++j) d.W[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = detail::second_partial(lj, U(i), U(j));
  }
  return d;
}

/// Full accelerations (x''^a, x''^alpha) given the free ones.
template <class X, class S>
std::vector<X> all_accelerations(const LagrangeData<S>& d, const std::vector<X>& xdd) {
  const std::size_t m = xdd.size(), k = d.c.size();
  std::vector<X> acc = xdd;
  for (std::size_t al = 0; al < k; ++al) {
    X s = X(d.c[al]);
    for (std::size_t b = 0; b < m; ++b) s += X(d.dPsi[al][b]) * xdd[b];
    acc.push_back(s);
  }
  return acc;
}

/// EL_i for all n coordinates at the given free accelerations.
template <class X, class S>
std::vector<X> euler_lagrange(const LagrangeData<S>& d, const std::vector<X>& xdd) {
  auto acc = all_accelerations(d, xdd);
  std::vector<X> el;
  for (std::size_t i = 0; i < d.A.size(); ++i) {
    X s = X(d.A[i]);
    for (std::size_t j = 0; j < acc.size(); ++j) s += X(d.W[i][j]) * acc[j];
    el.push_back(s);
  }
  return el;
}

/// Left side of the reduced equations EL_a + EL_alpha dPsi^alpha/du^a.
template <class X, class S>
std::vector<X> free_equations(const LagrangeData<S>& d, const std::vector<X>& xdd) {
  auto el = euler_lagrange(d, xdd);
  const std::size_t m = xdd.size(), k = d.c.size();
  std::vector<X> out(el.begin(), el.begin() + static_cast<std::ptrdiff_t>(m));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t al = 0; al < k; ++al) out[a] += el[m + al] * X(d.dPsi[al][a]);
  }
  return out;
}

/// C = J^T W J with J = [I; dPsi/du], the restriction of W.
template <class S>
Matrix<S> restricted_mass(const LagrangeData<S>& d) {
  const std::size_t m = d.dPsi.empty() ? d.W.size() : d.dPsi[0].size();
  const std::size_t n = d.W.size();
  auto J = [&](std::size_t i, std::size_t b) -> S {
    if (i < m) return S(i == b ? 1.0 : 0.0);
    return d.dPsi[i - m][b];
  };
  Matrix<S> C(m, std::vector<S>(m, S(0.0)));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      S s(0.0);
      for (std::size_t i = 0; i < n; ++i) {
        S ji = J(i, a);
        if (detail::is_exact_zero(ji)) continue;
        for (std::size_t j = 0; j < n; ++j) s += ji * d.W[i][j] * J(j, b);
      }
      C[a][b] = s;
      C[b][a] = s;
    }
  }
  return C;
}

template <class S>
struct ReducedParts {
  LagrangeData<S> data;
  Matrix<S> C;
  std::vector<S> G;
  std::vector<S> F;
  std::vector<S> lambda;
};

/// Throws SingularMatrixError (with the condition estimate) when C is singular.
template <class S>
ReducedParts<S> reduce_parts(const NonholonomicProblem& prob, std::span<const S> z, double max_condition = 1e12) {
  ReducedParts<S> r;
  r.data = lagrange_data<S>(prob, z);
  const auto m = static_cast<std::size_t>(prob.m);
  r.C = restricted_mass(r.data);
  r.G = free_equations(r.data, std::vector<S>(m, S(0.0)));
  std::vector<S> rhs;
  for (const auto& g : r.G) rhs.push_back(-g);
  r.F = solve(r.C, rhs, max_condition);
  auto el = euler_lagrange(r.data, r.F);
  r.lambda.assign(el.begin() + static_cast<std::ptrdiff_t>(m), el.end());
  return r;
}

struct Reduction {
  std::vector<double> F;
  std::vector<double> G;
  std::vector<double> lambda;
  std::vector<double> constrained_velocity;  // Psi^alpha at the point
  Eigen::MatrixXd C;
  Eigen::MatrixXd W;
  double condition = 0.0;
  bool hessian_positive_definite = false;
  bool mass_positive_definite = false;
  double linear_part_residual = 0.0;  // jet-extracted x''-linear part against C, relative
  double equation_residual = 0.0;     // reduced equations at the solution, relative to scale
};

inline Eigen::MatrixXd hessian_W(const NonholonomicProblem& prob, std::span<const double> full) {
  Jet lj = lagrangian_jet<double>(prob, full);
  const int n = prob.n();
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) w(i, j) = detail::second_partial(lj, 1 + n + i, 1 + n + j);
  }
  return w;
}

inline Eigen::MatrixXd constrained_mass_C(const NonholonomicProblem& prob, std::span<const double> z) {
  return value_matrix(restricted_mass(lagrange_data<double>(prob, z)));
}

inline Reduction reduce(const NonholonomicProblem& prob, std::span<const double> z, double max_condition = 1e12) {
  auto parts = reduce_parts<double>(prob, z, max_condition);
  Reduction r;
  r.F = parts.F;
  r.G = parts.G;
  r.lambda = parts.lambda;
  r.constrained_velocity.assign(parts.data.full.end() - prob.k, parts.data.full.end());
  r.C = value_matrix(parts.C);
  r.W = value_matrix(parts.data.W);
  r.condition = condition_number(r.C);
  r.hessian_positive_definite = is_positive_definite(r.W);
  r.mass_positive_definite = is_positive_definite(r.C);

  const int m = prob.m;
  std::vector<Jet> xdd;
  for (int b = 0; b < m; ++b) xdd.push_back(Jet::variable(b, 0.0, m, 1));
  auto el = free_equations(parts.data, xdd);
  Eigen::MatrixXd lin(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) lin(a, b) = el[static_cast<std::size_t>(a)].gradient(b);
  }
  r.linear_part_residual = (lin - r.C).norm() / std::max(1.0, r.C.norm());

  auto at_solution = free_equations(parts.data, parts.F);
  double scale = 1.0, res = 0.0;
  for (int a = 0; a < m; ++a) {
    res = std::max(res, std::abs(at_solution[static_cast<std::size_t>(a)]));
    scale = std::max(scale, std::abs(r.G[static_cast<std::size_t>(a)]));
  }
  r.equation_residual = res / scale;
  return r;
}

/// The reduced dynamics as a constrained system; F^a jets come from running
/// the reduction in jet arithmetic.
inline ConstrainedSystem as_constrained_system(const NonholonomicProblem& prob) {
  std::vector<std::string> zeros(static_cast<std::size_t>(prob.m), "0");
  ConstrainedSystem s = ConstrainedSystem::from_expressions(prob.free_coords, prob.constrained_coords, zeros,
                                                            prob.psi_sources, prob.params, prob.upsilon, prob.metric);
  s.F = [prob](std::span<const Jet> z) { return reduce_parts<Jet>(prob, z).F; };
  return s;
}

}  // namespace sodegeo
