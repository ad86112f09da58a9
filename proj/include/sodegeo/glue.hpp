#pragma once

// Covariant derivatives assembled from pieces.
//
// Given a projector P and a covariant derivative nabla^P defined only for
// fields in Img(P), the extension
//     nabla^P_X Y + ...  :=  nabla^P_{P(X)} Y + P([X - P(X), Y])
// is a covariant derivative along arbitrary X. Summing such extensions over a
// direct-sum family {P_A} (applied to P_A(Y)) gives a linear connection on
// the whole tangent bundle. Torsion, curvature and shape maps are computed
// from any connection given as a procedure.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sodegeo/germ.hpp"

namespace sodegeo {

/// Covariant derivative as a procedure on germs: (X, Y) -> nabla_X Y.
using Connection = std::function<VectorGerm(const VectorGerm&, const VectorGerm&)>;

/// Membership and decomposition checks use this absolute threshold, scaled
/// by 1 + the size of the fields involved.
inline constexpr double kImageTolerance = 1e-9;

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline VectorGerm extend_derivative(const Endomorphism& p, const Connection& nabla, const VectorGerm& x,
                                    const VectorGerm& y, bool check_image = true) {
  if (check_image) {
    VectorGerm py = p(y);
    double r = max_abs_diff(py, y);
    if (r > kImageTolerance * scale_of({&y})) {
      throw DecompositionError("extend_derivative: Y is not in the image of the projector (residual " +
                               std::to_string(r) + ")");
    }
  }
  VectorGerm px = p(x);
  return nabla(px, y) + p(lie_bracket(x - px, y));
}

struct GluePart {
  Endomorphism projector;
  Connection derivative;
  std::string name;
};

/// Value-level check that the projectors form a direct-sum family.
inline double decomposition_residual(const std::vector<GluePart>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty decomposition");
  const std::size_t dim = parts[0].projector.dim();
  std::vector<std::vector<std::vector<double>>> mats;
  for (const auto& part : parts) mats.push_back(part.projector.matrix());
  double r = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (const auto& m : mats) s += m[i][j];
      r = std::max(r, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  for (std::size_t a = 0; a < mats.size(); ++a) {
    for (std::size_t b = 0; b < mats.size(); ++b) {
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
          double s = 0.0;
          for (std::size_t k = 0; k < dim; ++k) s += mats[a][i][k] * mats[b][k][j];
          double want = a == b ? mats[a][i][j] : 0.0;
          r = std::max(r, std::abs(s - want));
        }
      }
    }
  }
  return r;
}

/// Sum over parts of the extension of nabla^A applied to P_A(Y).
class GluedConnection {
 public:
  GluedConnection() = default;
  explicit GluedConnection(std::vector<GluePart> parts, bool check = true) : parts_(std::move(parts)) {
    if (check) {
      double r = decomposition_residual(parts_);
      if (r > kImageTolerance) {
        throw DecompositionError("projectors do not form a direct-sum decomposition (residual " +
                                 std::to_string(r) + ")");
      }
    }
  }

  const std::vector<GluePart>& parts() const { return parts_; }

  VectorGerm operator()(const VectorGerm& x, const VectorGerm& y) const {
    VectorGerm r = zero_vector(x.size());
    for (const auto& part : parts_) r += extend_derivative(part.projector, part.derivative, x, part.projector(y), false);
    return r;
  }

  Connection as_connection() const {
    return [self = *this](const VectorGerm& x, const VectorGerm& y) { return self(x, y); };
  }

 private:
  std::vector<GluePart> parts_;
};

inline VectorGerm glue_derivative(const std::vector<GluePart>& parts, const VectorGerm& x, const VectorGerm& y) {
  return GluedConnection(parts)(x, y);
}

inline VectorGerm torsion(const Connection& nabla, const VectorGerm& x, const VectorGerm& y) {
  return nabla(x, y) - nabla(y, x) - lie_bracket(x, y);
}

inline VectorGerm curvature(const Connection& nabla, const VectorGerm& x, const VectorGerm& y, const VectorGerm& z) {
  return nabla(x, nabla(y, z)) - nabla(y, nabla(x, z)) - nabla(lie_bracket(x, y), z);
}

struct AxiomResiduals {
  double function_linearity = 0.0;  // nabla_{fX} Y = f nabla_X Y
  double leibniz = 0.0;             // nabla_X (fY) = X(f) Y + f nabla_X Y
};

inline AxiomResiduals axiom_residuals(const Connection& nabla, const Jet& f, const VectorGerm& x, const VectorGerm& y) {
  VectorGerm xy = nabla(x, y);
  return {relative_residual(nabla(f * x, y), f * xy), relative_residual(nabla(x, f * y), directional(x, f) * y + f * xy)};
}

enum class ShapeMode {
  kBracket,  // A_Z(xi) = nabla_Z xi - [Z, xi]
  kTorsion,  // A_Z(xi) = nabla_xi Z + T(Z, xi)
};

inline VectorGerm shape_map(const Connection& nabla, const VectorGerm& z, const VectorGerm& xi,
                            ShapeMode mode = ShapeMode::kBracket) {
  if (mode == ShapeMode::kBracket) return nabla(z, xi) - lie_bracket(z, xi);
  return nabla(xi, z) + torsion(nabla, z, xi);
}

/// (nabla_X A)(Y) for a (1,1) tensor A.
inline VectorGerm covariant_derivative(const Connection& nabla, const Endomorphism& a, const VectorGerm& x,
                                       const VectorGerm& y) {
  return nabla(x, a(y)) - a(nabla(x, y));
}

/// (nabla_X w)(Y) for a 1-form w.
inline Jet covariant_derivative(const Connection& nabla, const CovectorGerm& w, const VectorGerm& x,
                                const VectorGerm& y) {
  return directional(x, pair(w, y)) - pair(w, nabla(x, y));
}

/// Connection given by its frame components table[A][B] = nabla_{e_A} e_B:
/// nabla_X Y = X(w^B(Y)) e_B + w^A(X) w^B(Y) table[A][B].
inline Connection table_connection(AdaptedBasis basis, std::vector<std::vector<VectorGerm>> table) {
  return [basis = std::move(basis), table = std::move(table)](const VectorGerm& x, const VectorGerm& y) {
    auto a = basis.components(x);
    auto b = basis.components(y);
    VectorGerm r = zero_vector(x.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
      Jet d = directional(x, b[j]);
      if (!(d.is_constant() && d.value() == 0.0)) r += d * basis.vectors[j];
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        const auto& t = table[i][j];
        bool zero = true;
        for (const auto& c : t) zero = zero && c.is_constant() && c.value() == 0.0;
        if (!zero) r += (a[i] * b[j]) * t;
      }
    }
    return r;
  };
}

}  // namespace sodegeo
