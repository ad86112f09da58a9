#pragma once

// Vector fields, 1-forms and (1,1) tensors near a point, with every component
// carried as a jet in the manifold coordinates. A field whose components are
// jets of order k can be differentiated k times; each bracket or directional
// derivative lowers the usable order by one.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sodegeo/jet.hpp"

namespace sodegeo {

using VectorGerm = std::vector<Jet>;
using CovectorGerm = std::vector<Jet>;

/// A vector field given by its coordinate components as functions of the
/// coordinates. The procedure must be re-entrant.
using VectorFieldFn = std::function<std::vector<Jet>(std::span<const Jet>)>;

/// Coordinate functions at `point`, seeded as jets of the given order.
inline std::vector<Jet> coordinate_jets(std::span<const double> point, int order) {
  std::vector<Jet> z;
  z.reserve(point.size());
  const int n = static_cast<int>(point.size());
  for (int i = 0; i < n; ++i) z.push_back(Jet::variable(i, point[static_cast<std::size_t>(i)], n, order));
  return z;
}

inline VectorGerm germ_at(const VectorFieldFn& field, std::span<const double> point, int order) {
  auto z = coordinate_jets(point, order);
  VectorGerm v = field(z);
  if (v.size() != point.size()) {
    throw std::invalid_argument("vector field returned " + std::to_string(v.size()) +
                                " components on a " + std::to_string(point.size()) + "-dimensional manifold");
  }
  return v;
}

inline VectorGerm zero_vector(std::size_t dim) { return VectorGerm(dim, Jet(0.0)); }

inline VectorGerm coordinate_vector(std::size_t dim, std::size_t i) {
  VectorGerm v = zero_vector(dim);
  v[i] = Jet(1.0);
  return v;
}

inline CovectorGerm coordinate_covector(std::size_t dim, std::size_t i) { return coordinate_vector(dim, i); }

inline VectorGerm operator+(const VectorGerm& a, const VectorGerm& b) {
  VectorGerm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline VectorGerm operator-(const VectorGerm& a, const VectorGerm& b) {
  VectorGerm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline VectorGerm operator-(const VectorGerm& a) {
  VectorGerm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline VectorGerm operator*(const Jet& f, const VectorGerm& a) {
  VectorGerm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = f * a[i];
  return r;
}

inline VectorGerm& operator+=(VectorGerm& a, const VectorGerm& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline VectorGerm& operator-=(VectorGerm& a, const VectorGerm& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline VectorGerm truncated(const VectorGerm& a, int order) {
  VectorGerm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i].truncated(order);
  return r;
}

/// Usable jet order of a field (minimum over components; constants count as unbounded).
inline int germ_order(const VectorGerm& a) {
  int k = Jet::kConstantOrder;
  for (const auto& c : a) k = std::min(k, c.order());
  return k;
}

/// Pairing w(X).
inline Jet pair(const CovectorGerm& w, const VectorGerm& x) {
  Jet s(0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i].is_constant() && w[i].value() == 0.0) continue;
    s += w[i] * x[i];
  }
  return s;
}

/// Derivative of f along X.
inline Jet directional(const VectorGerm& x, const Jet& f) {
  if (f.is_constant()) return Jet(0.0);
  Jet s(0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].is_constant() && x[i].value() == 0.0) continue;
    s += x[i] * f.derivative(static_cast<int>(i));
  }
  return s;
}

/// [X, Y]^i = X(Y^i) - Y(X^i).
inline VectorGerm lie_bracket(const VectorGerm& x, const VectorGerm& y) {
  if (x.size() != y.size()) throw std::invalid_argument("lie_bracket: dimension mismatch");
  VectorGerm r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = directional(x, y[i]) - directional(y, x[i]);
  return r;
}

/// A (1,1) tensor stored as a sum of vector (x) covector terms.
class Endomorphism {
 public:
  struct Term {
    VectorGerm vector;
    CovectorGerm covector;
  };

  Endomorphism() = default;
  explicit Endomorphism(std::size_t dim) : dim_(dim) {}

  static Endomorphism identity(std::size_t dim) {
    Endomorphism e(dim);
    for (std::size_t i = 0; i < dim; ++i) e.add(coordinate_vector(dim, i), coordinate_covector(dim, i));
    return e;
  }

  std::size_t dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }

  void add(VectorGerm v, CovectorGerm w) { terms_.push_back({std::move(v), std::move(w)}); }

  VectorGerm operator()(const VectorGerm& x) const {
    VectorGerm r = zero_vector(dim_);
    for (const auto& t : terms_) r += pair(t.covector, x) * t.vector;
    return r;
  }

  /// Value of the coordinate matrix at the point (row i, column j).
  std::vector<std::vector<double>> matrix() const {
    std::vector<std::vector<double>> m(dim_, std::vector<double>(dim_, 0.0));
    for (const auto& t : terms_) {
      for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) m[i][j] += t.vector[i].value() * t.covector[j].value();
      }
    }
    return m;
  }

  friend Endomorphism operator+(const Endomorphism& a, const Endomorphism& b) {
    Endomorphism r = a;
    for (const auto& t : b.terms_) r.terms_.push_back(t);
    return r;
  }

  friend Endomorphism operator-(const Endomorphism& a, const Endomorphism& b) {
    Endomorphism r = a;
    for (const auto& t : b.terms_) r.terms_.push_back({-t.vector, t.covector});
    return r;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Residual helpers. All residuals are measured on values at the point.

inline double max_abs(const VectorGerm& v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, std::abs(c.value()));
  return m;
}

inline double max_abs(const Jet& f) { return std::abs(f.value()); }

inline double max_abs_diff(const VectorGerm& a, const VectorGerm& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i].value() - b[i].value()));
  return m;
}

/// 1 + largest absolute component among the given fields.
inline double scale_of(std::initializer_list<const VectorGerm*> fields) {
  double m = 0.0;
  for (const auto* f : fields) m = std::max(m, max_abs(*f));
  return 1.0 + m;
}

/// Residual of a - b relative to 1 + max(|a|, |b|).
inline double relative_residual(const VectorGerm& a, const VectorGerm& b) {
  return max_abs_diff(a, b) / scale_of({&a, &b});
}

inline double relative_residual(const Jet& a, const Jet& b) {
  return std::abs(a.value() - b.value()) / (1.0 + std::max(std::abs(a.value()), std::abs(b.value())));
}

inline std::vector<double> values(const VectorGerm& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& c : v) out.push_back(c.value());
  return out;
}

/// (L_X A)(Y) = [X, A(Y)] - A([X, Y]).
inline VectorGerm lie_derivative(const VectorGerm& x, const Endomorphism& a, const VectorGerm& y) {
  return lie_bracket(x, a(y)) - a(lie_bracket(x, y));
}

/// A local frame {e_A} with its dual coframe {w^A}.
struct AdaptedBasis {
  std::vector<VectorGerm> vectors;
  std::vector<CovectorGerm> covectors;
  std::vector<std::string> labels;

  std::size_t size() const { return vectors.size(); }

  /// w^A(X) for every A.
  std::vector<Jet> components(const VectorGerm& x) const {
    std::vector<Jet> c;
    c.reserve(covectors.size());
    for (const auto& w : covectors) c.push_back(pair(w, x));
    return c;
  }

  std::vector<double> component_values(const VectorGerm& x) const {
    std::vector<double> c;
    for (const auto& w : covectors) c.push_back(pair(w, x).value());
    return c;
  }

  VectorGerm combine(const std::vector<Jet>& c) const {
    VectorGerm r = zero_vector(vectors.empty() ? 0 : vectors[0].size());
    for (std::size_t a = 0; a < c.size(); ++a) {
      if (c[a].is_constant() && c[a].value() == 0.0) continue;
      r += c[a] * vectors[a];
    }
    return r;
  }

  /// Max deviation of the pairing matrix w^A(e_B) from the identity.
  double duality_residual() const {
    double r = 0.0;
    for (std::size_t a = 0; a < covectors.size(); ++a) {
      for (std::size_t b = 0; b < vectors.size(); ++b) {
        r = std::max(r, std::abs(pair(covectors[a], vectors[b]).value() - (a == b ? 1.0 : 0.0)));
      }
    }
    return r;
  }
};

}  // namespace sodegeo
