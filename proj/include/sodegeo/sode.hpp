#pragma once

// Geometry of an unconstrained system x''^i = F^i(t, x, x') on the evolution
// space E with coordinates (t, x^1..x^n, u^1..u^n).
//
// The frame {Gamma, V_i, H_i} and coframe {dt, psi^i, theta^i} are built from
// jets of F at a point; everything else (connection, torsion, shape map,
// Jacobi endomorphism, curvature) is evaluated from them.

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sodegeo/expr.hpp"
#include "sodegeo/glue.hpp"
#include "sodegeo/linalg.hpp"

namespace sodegeo {

/// Accelerations as functions of the coordinate jets.
using AccelerationFn = std::function<std::vector<Jet>(std::span<const Jet>)>;

/// Builds the slot table (t, names..., u_names...).
inline std::map<std::string, int> evolution_slots(const std::vector<std::string>& coords) {
  std::map<std::string, int> slots{{"t", 0}};
  const int n = static_cast<int>(coords.size());
  for (int i = 0; i < n; ++i) {
    slots[coords[static_cast<std::size_t>(i)]] = 1 + i;
    slots["u_" + coords[static_cast<std::size_t>(i)]] = 1 + n + i;
  }
  return slots;
}

inline std::vector<BoundExpr> bind_all(const std::vector<std::string>& sources, const std::map<std::string, int>& slots,
                                       const std::map<std::string, double>& params) {
  std::vector<BoundExpr> out;
  for (const auto& s : sources) out.emplace_back(parse(s), slots, params);
  return out;
}

struct SodeSystem {
  int n = 0;
  std::vector<std::string> coords;
  AccelerationFn F;

  int dim() const { return 2 * n + 1; }

  /// Names of the evolution-space coordinates in order.
  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names{"t"};
    for (const auto& c : coords) names.push_back(c);
    for (const auto& c : coords) names.push_back("u_" + c);
    return names;
  }

  static SodeSystem from_expressions(const std::vector<std::string>& coords, const std::vector<std::string>& F,
                                     const std::map<std::string, double>& params = {}) {
    if (coords.empty()) throw std::invalid_argument("a system needs at least one coordinate");
    if (F.size() != coords.size()) {
      throw std::invalid_argument("expected " + std::to_string(coords.size()) + " expressions for F, got " +
                                  std::to_string(F.size()));
    }
    auto bound = bind_all(F, evolution_slots(coords), params);
    SodeSystem s;
    s.n = static_cast<int>(coords.size());
    s.coords = coords;
    s.F = [bound](std::span<const Jet> z) {
      std::vector<Jet> out;
      for (const auto& b : bound) out.push_back(b.eval(z));
      return out;
    };
    return s;
  }
};

/// Everything needed at one point of E. Jets: F has the requested order k,
/// Gamma^i_j and the frame order k-1, Phi and R order k-2.
struct UnconstrainedFrame {
  int n = 0;
  std::vector<double> point;
  double perturbation = 0.0;  // added to the x-components of Gamma only
  std::vector<Jet> z;
  std::vector<Jet> F;
  Matrix<Jet> G;      // G[i][j] = Gamma^i_j = -1/2 dF^i/du^j
  Matrix<Jet> Phi;    // Phi[i][j] = Phi^i_j
  std::vector<Matrix<Jet>> R;  // R[k][i][j] = R^k_ij

  VectorGerm Gamma;
  std::vector<VectorGerm> V, H;
  CovectorGerm dt;
  std::vector<CovectorGerm> theta, psi;

  Endomorphism P_Gamma, P_V, P_H, S, Q;

  std::size_t dim() const { return static_cast<std::size_t>(2 * n + 1); }
  std::size_t t_index() const { return 0; }
  std::size_t x_index(int i) const { return static_cast<std::size_t>(1 + i); }
  std::size_t u_index(int i) const { return static_cast<std::size_t>(1 + n + i); }
  bool has_curvature() const { return !Phi.empty(); }

  /// Basis ordered as Gamma, V_1..V_n, H_1..H_n with duals dt, psi, theta.
  AdaptedBasis basis() const {
    AdaptedBasis b;
    b.vectors.push_back(Gamma);
    b.covectors.push_back(dt);
    b.labels.push_back("Gamma");
    for (int i = 0; i < n; ++i) {
      b.vectors.push_back(V[static_cast<std::size_t>(i)]);
      b.covectors.push_back(psi[static_cast<std::size_t>(i)]);
      b.labels.push_back("V" + std::to_string(i + 1));
    }
    for (int i = 0; i < n; ++i) {
      b.vectors.push_back(H[static_cast<std::size_t>(i)]);
      b.covectors.push_back(theta[static_cast<std::size_t>(i)]);
      b.labels.push_back("H" + std::to_string(i + 1));
    }
    return b;
  }

  /// Jacobi endomorphism Phi^i_j theta^j (x) V_i.
  Endomorphism jacobi() const {
    Endomorphism e(dim());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        e.add(Phi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * V[static_cast<std::size_t>(i)],
              theta[static_cast<std::size_t>(j)]);
      }
    }
    return e;
  }

  /// R(X, Y) = R^k_ij theta^i(X) theta^j(Y) V_k, so that R(H_i, H_j) = R^k_ij V_k.
  VectorGerm curvature_form(const VectorGerm& x, const VectorGerm& y) const {
    VectorGerm r = zero_vector(dim());
    std::vector<Jet> tx, ty;
    for (int i = 0; i < n; ++i) {
      tx.push_back(pair(theta[static_cast<std::size_t>(i)], x));
      ty.push_back(pair(theta[static_cast<std::size_t>(i)], y));
    }
    for (int k = 0; k < n; ++k) {
      Jet c(0.0);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          c += R[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               (tx[static_cast<std::size_t>(i)] * ty[static_cast<std::size_t>(j)]);
        }
      }
      r += c * V[static_cast<std::size_t>(k)];
    }
    return r;
  }
};

/// `perturb` shifts the x-components of Gamma (breaking theta(Gamma) = 0) while the coframe and every
/// derived object keep the exact values; used to check that the property
/// suites detect a corrupted frame.
inline UnconstrainedFrame build_frame(const SodeSystem& sys, std::span<const double> point, int order = 3,
                                      double perturb = 0.0) {
  if (static_cast<int>(point.size()) != sys.dim()) {
    throw std::invalid_argument("point has " + std::to_string(point.size()) + " coordinates, evolution space has " +
                                std::to_string(sys.dim()));
  }
  if (order < 1 || order > kMaxJetOrder) throw std::invalid_argument("frame order must be in [1, 3]");
  UnconstrainedFrame f;
  const int n = sys.n;
  const std::size_t D = static_cast<std::size_t>(sys.dim());
  f.n = n;
  f.point.assign(point.begin(), point.end());
  f.z = coordinate_jets(point, order);
  f.F = sys.F(f.z);
  if (static_cast<int>(f.F.size()) != n) throw std::invalid_argument("acceleration has wrong component count");

  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  f.G.assign(sz(n), std::vector<Jet>(sz(n)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) f.G[sz(i)][sz(j)] = -0.5 * f.F[sz(i)].derivative(static_cast<int>(f.u_index(j)));
  }

  f.Gamma = zero_vector(D);
  f.Gamma[0] = Jet(1.0);
  for (int i = 0; i < n; ++i) {
    f.Gamma[f.x_index(i)] = f.z[f.u_index(i)];
    f.Gamma[f.u_index(i)] = f.F[sz(i)];
  }
  for (int i = 0; i < n; ++i) {
    f.V.push_back(coordinate_vector(D, f.u_index(i)));
    VectorGerm h = coordinate_vector(D, f.x_index(i));
    for (int j = 0; j < n; ++j) h[f.u_index(j)] = -f.G[sz(j)][sz(i)];
    f.H.push_back(h);
  }

  f.dt = coordinate_covector(D, 0);
  for (int i = 0; i < n; ++i) {
    CovectorGerm th = coordinate_covector(D, f.x_index(i));
    th[0] = -f.z[f.u_index(i)];
    f.theta.push_back(th);
  }
  for (int i = 0; i < n; ++i) {
    // psi^i = du^i - F^i dt + Gamma^i_j theta^j
    CovectorGerm ps = coordinate_covector(D, f.u_index(i));
    ps[0] = -f.F[sz(i)];
    for (int j = 0; j < n; ++j) {
      ps[0] -= f.G[sz(i)][sz(j)] * f.z[f.u_index(j)];
      ps[f.x_index(j)] = f.G[sz(i)][sz(j)];
    }
    f.psi.push_back(ps);
  }

  f.P_Gamma = Endomorphism(D);
  f.P_Gamma.add(f.Gamma, f.dt);
  f.P_V = Endomorphism(D);
  f.P_H = Endomorphism(D);
  f.S = Endomorphism(D);
  f.Q = Endomorphism(D);
  for (int i = 0; i < n; ++i) {
    f.P_V.add(f.V[sz(i)], f.psi[sz(i)]);
    f.P_H.add(f.H[sz(i)], f.theta[sz(i)]);
    f.S.add(f.V[sz(i)], f.theta[sz(i)]);
    f.Q.add(f.H[sz(i)], f.psi[sz(i)]);
  }

  if (order >= 2) {
    f.Phi.assign(sz(n), std::vector<Jet>(sz(n)));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Jet v = -f.F[sz(i)].derivative(static_cast<int>(f.x_index(j))) - directional(f.Gamma, f.G[sz(i)][sz(j)]);
        for (int k = 0; k < n; ++k) v -= f.G[sz(k)][sz(j)] * f.G[sz(i)][sz(k)];
        f.Phi[sz(i)][sz(j)] = v;
      }
    }
    // dF^k/du^l jets of order k-1, second derivatives of order k-2.
    std::vector<std::vector<Jet>> Fu(sz(n), std::vector<Jet>(sz(n)));
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) Fu[sz(k)][sz(l)] = f.F[sz(k)].derivative(static_cast<int>(f.u_index(l)));
    }
    f.R.assign(sz(n), Matrix<Jet>(sz(n), std::vector<Jet>(sz(n))));
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          Jet v = Fu[sz(k)][sz(j)].derivative(static_cast<int>(f.x_index(i))) -
                  Fu[sz(k)][sz(i)].derivative(static_cast<int>(f.x_index(j)));
          Jet w(0.0);
          for (int l = 0; l < n; ++l) {
            w += Fu[sz(l)][sz(i)] * Fu[sz(k)][sz(l)].derivative(static_cast<int>(f.u_index(j))) -
                 Fu[sz(l)][sz(j)] * Fu[sz(k)][sz(l)].derivative(static_cast<int>(f.u_index(i)));
          }
          f.R[sz(k)][sz(i)][sz(j)] = 0.5 * (v + 0.5 * w);
        }
      }
    }
  }
  if (perturb != 0.0) {
    f.perturbation = perturb;
    for (int i = 0; i < n; ++i) f.Gamma[f.x_index(i)] += Jet(perturb);
    f.P_Gamma = Endomorphism(D);
    f.P_Gamma.add(f.Gamma, f.dt);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Massa-Pagani connection.

/// Glued from nabla^Gamma_X Y = X(dt(Y)) Gamma, nabla^H_X Y = Q([X, S(Y)]),
/// nabla^V_X Y = S([X, Q(Y)]) on the three eigendistributions.
inline std::vector<GluePart> mp_parts(const UnconstrainedFrame& f) {
  std::vector<GluePart> parts;
  parts.push_back({f.P_Gamma,
                   [gamma = f.Gamma, dt = f.dt](const VectorGerm& x, const VectorGerm& y) {
                     return directional(x, pair(dt, y)) * gamma;
                   },
                   "Gamma"});
  parts.push_back({f.P_H, [S = f.S, Q = f.Q](const VectorGerm& x, const VectorGerm& y) { return Q(lie_bracket(x, S(y))); },
                   "H"});
  parts.push_back({f.P_V, [S = f.S, Q = f.Q](const VectorGerm& x, const VectorGerm& y) { return S(lie_bracket(x, Q(y))); },
                   "V"});
  return parts;
}

inline Connection mp_glued(const UnconstrainedFrame& f) {
  return GluedConnection(mp_parts(f), f.perturbation == 0.0).as_connection();
}

/// The explicit five-term formula.
inline VectorGerm mp_covderiv(const UnconstrainedFrame& f, const VectorGerm& x, const VectorGerm& y) {
  VectorGerm phx = f.P_H(x), pvx = f.P_V(x);
  VectorGerm r = directional(x, pair(f.dt, y)) * f.Gamma;
  r += f.Q(lie_bracket(phx, f.S(y)));
  r += f.S(lie_bracket(pvx, f.Q(y)));
  r += f.P_H(lie_bracket(x - phx, f.P_H(y)));
  r += f.P_V(lie_bracket(x - pvx, f.P_V(y)));
  return r;
}

inline Connection mp_explicit(const UnconstrainedFrame& f) {
  return [f](const VectorGerm& x, const VectorGerm& y) { return mp_covderiv(f, x, y); };
}

/// nabla_{e_A} e_B in the basis order of UnconstrainedFrame::basis().
inline std::vector<std::vector<VectorGerm>> mp_components(const UnconstrainedFrame& f) {
  const int n = f.n;
  const std::size_t N = f.dim();
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  std::vector<std::vector<VectorGerm>> t(N, std::vector<VectorGerm>(N, zero_vector(N)));
  auto v_slot = [sz](int i) { return sz(1 + i); };
  auto h_slot = [sz, n](int i) { return sz(1 + n + i); };
  for (int i = 0; i < n; ++i) {
    VectorGerm gh = zero_vector(N), gv = zero_vector(N);
    for (int j = 0; j < n; ++j) {
      gh += f.G[sz(j)][sz(i)] * f.H[sz(j)];
      gv += f.G[sz(j)][sz(i)] * f.V[sz(j)];
    }
    t[0][h_slot(i)] = gh;
    t[0][v_slot(i)] = gv;
    for (int j = 0; j < n; ++j) {
      VectorGerm hh = zero_vector(N), hv = zero_vector(N);
      for (int k = 0; k < n; ++k) {
        Jet c = f.G[sz(k)][sz(i)].derivative(static_cast<int>(f.u_index(j)));
        hh += c * f.H[sz(k)];
        hv += c * f.V[sz(k)];
      }
      t[h_slot(i)][h_slot(j)] = hh;
      t[h_slot(i)][v_slot(j)] = hv;
    }
  }
  return t;
}

inline Connection mp_from_components(const UnconstrainedFrame& f) {
  return table_connection(f.basis(), mp_components(f));
}

// ---------------------------------------------------------------------------
// Shape map of Gamma and torsion.

struct ShapeEigenpair {
  double mu = 0.0;
  std::vector<double> coordinates;       // components in the coordinate frame
  std::vector<double> frame_components;  // components in the adapted basis
};

struct ShapeAnalysis {
  Eigen::MatrixXd A;                     // adapted-frame matrix of A_Gamma (column B = A(e_B))
  std::vector<ShapeEigenpair> eigenpairs;
  std::vector<std::string> notes;        // e.g. complex Phi-eigenvalues
};

/// Frame matrix of an endomorphism-like map: column B holds w^A(map(e_B)).
inline Eigen::MatrixXd frame_matrix(const AdaptedBasis& b, const std::function<VectorGerm(const VectorGerm&)>& map) {
  const auto N = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd m(N, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    auto col = b.component_values(map(b.vectors[static_cast<std::size_t>(c)]));
    for (Eigen::Index r = 0; r < N; ++r) m(r, c) = col[static_cast<std::size_t>(r)];
  }
  return m;
}

inline constexpr double kZeroEigenvalueTolerance = 1e-9;

/// A_Gamma = -Phi + Q; real eigenvalues mu = +-sqrt(lambda) for real
/// eigenvalues lambda >= 0 of (-Phi), eigenvectors w^i H_i + mu w^i V_i, plus
/// Gamma in the kernel.
inline ShapeAnalysis mp_shape(const UnconstrainedFrame& f) {
  if (!f.has_curvature()) throw std::logic_error("shape map needs a frame built with order >= 2");
  ShapeAnalysis out;
  const int n = f.n;
  const auto N = static_cast<Eigen::Index>(f.dim());
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  out.A = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < n; ++i) {
    out.A(1 + n + i, 1 + i) = 1.0;  // A(V_i) = H_i
    for (int j = 0; j < n; ++j) out.A(1 + j, 1 + n + i) = -f.Phi[sz(j)][sz(i)].value();  // A(H_i) = -Phi^j_i V_j
  }
  AdaptedBasis basis = f.basis();
  auto lift = [&](double mu, const std::vector<double>& w) {
    ShapeEigenpair e;
    e.mu = mu;
    e.frame_components.assign(static_cast<std::size_t>(N), 0.0);
    for (int i = 0; i < n; ++i) {
      e.frame_components[sz(1 + n + i)] = w[sz(i)];
      e.frame_components[sz(1 + i)] = mu * w[sz(i)];
    }
    e.coordinates.assign(static_cast<std::size_t>(N), 0.0);
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t c = 0; c < static_cast<std::size_t>(N); ++c) {
        e.coordinates[c] += e.frame_components[a] * basis.vectors[a][c].value();
      }
    }
    return e;
  };
  {
    ShapeEigenpair g;
    g.mu = 0.0;
    g.frame_components.assign(static_cast<std::size_t>(N), 0.0);
    g.frame_components[0] = 1.0;
    g.coordinates = values(f.Gamma);
    out.eigenpairs.push_back(g);
  }
  Eigen::MatrixXd minus_phi(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) minus_phi(i, j) = -f.Phi[sz(i)][sz(j)].value();
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(minus_phi);
  for (int k = 0; k < n; ++k) {
    std::complex<double> lambda = es.eigenvalues()(k);
    if (std::abs(lambda.imag()) > kZeroEigenvalueTolerance * (1.0 + std::abs(lambda))) {
      if (lambda.imag() > 0) {
        out.notes.push_back("no real shape eigenvalue from Phi-eigenvalue " + std::to_string(-lambda.real()) +
                            (lambda.imag() > 0 ? " - " : " + ") + std::to_string(std::abs(lambda.imag())) + "i");
      }
      continue;
    }
    std::vector<double> w(sz(n));
    Eigen::VectorXcd ev = es.eigenvectors().col(k);
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      w[sz(i)] = ev(i).real();
      norm += w[sz(i)] * w[sz(i)];
    }
    norm = std::sqrt(norm);
    for (auto& c : w) c /= norm;
    double lam = lambda.real();
    if (std::abs(lam) <= kZeroEigenvalueTolerance) {
      out.eigenpairs.push_back(lift(0.0, w));
    } else if (lam > 0) {
      double mu = std::sqrt(lam);
      out.eigenpairs.push_back(lift(mu, w));
      out.eigenpairs.push_back(lift(-mu, w));
    } else {
      out.notes.push_back("no real shape eigenvalue from Phi-eigenvalue " + std::to_string(-lam));
    }
  }
  return out;
}

/// Expected torsion on basis pairs: T(Gamma, V_i) = H_i, T(Gamma, H_i) =
/// -Phi^j_i V_j, T(H_i, H_j) = -R^k_ij V_k, all others zero.
inline std::vector<std::vector<VectorGerm>> mp_torsion_table(const UnconstrainedFrame& f) {
  const int n = f.n;
  const std::size_t N = f.dim();
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  std::vector<std::vector<VectorGerm>> t(N, std::vector<VectorGerm>(N, zero_vector(N)));
  auto set = [&](std::size_t a, std::size_t b, const VectorGerm& v) {
    t[a][b] = v;
    t[b][a] = -v;
  };
  for (int i = 0; i < n; ++i) {
    set(0, sz(1 + i), f.H[sz(i)]);
    VectorGerm v = zero_vector(N);
    for (int j = 0; j < n; ++j) v -= f.Phi[sz(j)][sz(i)] * f.V[sz(j)];
    set(0, sz(1 + n + i), v);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      VectorGerm r = zero_vector(N);
      for (int k = 0; k < n; ++k) r -= f.R[sz(k)][sz(i)][sz(j)] * f.V[sz(k)];
      t[sz(1 + n + i)][sz(1 + n + j)] = r;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Random test fields.

/// Random polynomial function of degree <= 2 around the point.
inline Jet random_function(std::mt19937_64& rng, const std::vector<Jet>& z, double amplitude = 1.0) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Jet f(u(rng));
  for (std::size_t i = 0; i < z.size(); ++i) {
    Jet zi = z[i].with_value(0.0);
    f += u(rng) * zi;
    for (std::size_t j = i; j < z.size(); ++j) f += (0.5 * u(rng)) * (zi * z[j].with_value(0.0));
  }
  return f;
}

inline VectorGerm random_field(std::mt19937_64& rng, const std::vector<Jet>& z, double amplitude = 1.0) {
  VectorGerm v;
  for (std::size_t i = 0; i < z.size(); ++i) v.push_back(random_function(rng, z, amplitude));
  return v;
}

/// Random function of the listed coordinates only.
inline Jet random_function_of(std::mt19937_64& rng, const std::vector<Jet>& z, const std::vector<std::size_t>& which,
                              double amplitude = 1.0) {
  std::vector<Jet> sub;
  for (auto i : which) sub.push_back(z[i]);
  return random_function(rng, sub, amplitude);
}

// ---------------------------------------------------------------------------
// Residual suites. Each entry is a maximum over the sampled fields.

using ResidualMap = std::map<std::string, double>;

inline void record(ResidualMap& m, const std::string& name, double r) {
  auto it = m.find(name);
  if (it == m.end() || !(r <= it->second)) m[name] = r;
}

inline double rel_norm(const VectorGerm& v, std::initializer_list<const VectorGerm*> refs) {
  double s = 1.0;
  for (const auto* r : refs) s = std::max(s, 1.0 + max_abs(*r));
  return max_abs(v) / s;
}

/// Frame duality, eigenstructure of L_Gamma S, connection consistency,
/// the eight characterizing properties, commutator identities, L_Gamma Q o S
/// = Phi, the Phi/R identity and the torsion table.
inline ResidualMap verify_unconstrained(const SodeSystem& sys, std::span<const double> point, std::mt19937_64& rng,
                                        int nfields = 3, double perturb = 0.0) {
  ResidualMap m;
  UnconstrainedFrame f = build_frame(sys, point, 3, perturb);
  const int n = f.n;
  const std::size_t N = f.dim();
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  AdaptedBasis basis = f.basis();
  record(m, "frame.duality", basis.duality_residual());
  record(m, "frame.decomposition", decomposition_residual(mp_parts(f)));
  record(m, "frame.gamma_contact", std::max(max_abs(pair(f.theta[0], f.Gamma)), max_abs(pair(f.psi[0], f.Gamma))));

  for (int i = 0; i < n; ++i) {
    record(m, "lie_gamma_S.gamma", rel_norm(lie_derivative(f.Gamma, f.S, f.Gamma), {}));
    record(m, "lie_gamma_S.vertical",
           relative_residual(lie_derivative(f.Gamma, f.S, f.V[sz(i)]), f.V[sz(i)]));
    record(m, "lie_gamma_S.horizontal",
           relative_residual(lie_derivative(f.Gamma, f.S, f.H[sz(i)]), -f.H[sz(i)]));
  }

  Connection glued = mp_glued(f);
  Connection explicit_form = mp_explicit(f);
  Connection table = mp_from_components(f);

  auto vertical_lift = [&]() {
    std::vector<std::size_t> base;
    for (std::size_t i = 0; i <= sz(n); ++i) base.push_back(i);
    VectorGerm u = zero_vector(N);
    for (int i = 0; i < n; ++i) u[f.u_index(i)] = random_function_of(rng, f.z, base);
    return u;
  };

  for (int trial = 0; trial < nfields; ++trial) {
    VectorGerm x = random_field(rng, f.z), y = random_field(rng, f.z);
    VectorGerm g = glued(x, y);
    auto ax = axiom_residuals(glued, random_function(rng, f.z), x, y);
    record(m, "axioms.function_linearity", ax.function_linearity);
    record(m, "axioms.leibniz", ax.leibniz);
    record(m, "connection.explicit_vs_glued", relative_residual(explicit_form(x, y), g));
    record(m, "connection.components_vs_explicit", relative_residual(table(x, y), explicit_form(x, y)));

    record(m, "mp.nabla_gamma", rel_norm(glued(x, f.Gamma), {&x}));
    record(m, "mp.nabla_dt", std::abs(covariant_derivative(glued, f.dt, x, y).value()) / scale_of({&x, &y}));
    record(m, "mp.nabla_S", rel_norm(covariant_derivative(glued, f.S, x, y), {&x, &y}));
    record(m, "mp.nabla_Q", rel_norm(covariant_derivative(glued, f.Q, x, y), {&x, &y}));
    record(m, "mp.horizontal_from_torsion", relative_residual(f.P_H(x), torsion(glued, f.Gamma, f.S(x))));
    record(m, "mp.vertical_from_torsion", relative_residual(f.P_V(x), f.S(torsion(glued, f.Gamma, x))));
    VectorGerm v = f.P_V(random_field(rng, f.z));
    VectorGerm w = random_field(rng, f.z);
    record(m, "mp.curvature_gamma_vertical", rel_norm(curvature(glued, f.Gamma, v, w), {&v, &w}));
    VectorGerm lift = vertical_lift();
    record(m, "mp.vertical_lift_parallel", rel_norm(glued(v, lift), {&v, &lift}));

    VectorGerm xv = f.P_V(x), xh = f.P_H(x), yv = f.P_V(y), yh = f.P_H(y);
    Endomorphism shape_closed = f.Q - f.jacobi();
    record(m, "commutator.gamma_vertical", relative_residual(lie_bracket(f.Gamma, xv), glued(f.Gamma, xv) - shape_closed(xv)));
    record(m, "commutator.gamma_horizontal", relative_residual(lie_bracket(f.Gamma, xh), glued(f.Gamma, xh) - shape_closed(xh)));
    record(m, "commutator.vertical_vertical", relative_residual(lie_bracket(xv, yv), glued(xv, yv) - glued(yv, xv)));
    record(m, "commutator.vertical_horizontal", relative_residual(lie_bracket(xv, yh), glued(xv, yh) - glued(yh, xv)));
    record(m, "commutator.horizontal_horizontal",
           relative_residual(lie_bracket(xh, yh), glued(xh, yh) - glued(yh, xh) + f.curvature_form(xh, yh)));

    record(m, "lie_gamma_Q_S.jacobi",
           relative_residual(lie_derivative(f.Gamma, f.Q, f.S(x)), f.jacobi()(x)));
    record(m, "shape.gamma_formula", relative_residual(shape_map(glued, f.Gamma, x), shape_closed(x)));
    record(m, "shape.representations",
           relative_residual(shape_map(glued, x, y, ShapeMode::kBracket), shape_map(glued, x, y, ShapeMode::kTorsion)));
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        Jet lhs = directional(f.V[sz(i)], f.Phi[sz(k)][sz(j)]) - directional(f.V[sz(j)], f.Phi[sz(k)][sz(i)]);
        Jet rhs = 3.0 * f.R[sz(k)][sz(i)][sz(j)];
        record(m, "curvature.phi_identity", relative_residual(lhs, rhs));
      }
      record(m, "curvature.horizontal_bracket",
             relative_residual(lie_bracket(f.H[sz(i)], f.H[sz(j)]), [&] {
               VectorGerm r = zero_vector(N);
               for (int k = 0; k < n; ++k) r += f.R[sz(k)][sz(i)][sz(j)] * f.V[sz(k)];
               return r;
             }()));
    }
  }

  auto expected = mp_torsion_table(f);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      record(m, "torsion.table", relative_residual(torsion(glued, basis.vectors[a], basis.vectors[b]), expected[a][b]));
    }
  }
  return m;
}

}  // namespace sodegeo
