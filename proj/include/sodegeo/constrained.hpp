#pragma once

// Constrained systems x''^a = F^a(t, x^b, x^beta, u^b), x'^alpha =
// Psi^alpha(t, x^b, x^beta, u^b) on the constraint space with coordinates
// (t, x^a, x^alpha, u^a); a = 1..m free, alpha = 1..k constrained.
//
// Frame {Gamma~, d/dx^alpha, V~_a, H~_a} with duals {dt, eta^alpha, psi~^a,
// theta^a}; the connection is glued from four submodule derivatives, the
// one on Img(N) coming from the coefficients Upsilon of a linear connection
// on the constraint manifold.

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sodegeo/expr.hpp"
#include "sodegeo/glue.hpp"
#include "sodegeo/linalg.hpp"
#include "sodegeo/sode.hpp"

namespace sodegeo {

/// Upsilon^gamma_{alpha beta} stored at [(gamma * k + alpha) * k + beta].
using UpsilonFn = std::function<std::vector<Jet>(std::span<const Jet>)>;

inline std::map<std::string, int> constrained_slots(const std::vector<std::string>& free,
                                                    const std::vector<std::string>& constrained) {
  std::map<std::string, int> slots{{"t", 0}};
  const int m = static_cast<int>(free.size());
  const int n = m + static_cast<int>(constrained.size());
  for (int a = 0; a < m; ++a) {
    slots[free[static_cast<std::size_t>(a)]] = 1 + a;
    slots["u_" + free[static_cast<std::size_t>(a)]] = 1 + n + a;
  }
  for (std::size_t al = 0; al < constrained.size(); ++al) slots[constrained[al]] = 1 + m + static_cast<int>(al);
  return slots;
}

/// Levi-Civita coefficients of a metric g_{alpha beta}(x^gamma) given as jets.
/// Returns Upsilon in the UpsilonFn layout.
inline std::vector<Jet> levi_civita(const Matrix<Jet>& g, const std::vector<std::size_t>& coordinate_slots) {
  const std::size_t k = g.size();
  Matrix<Jet> ginv = inverse(g);
  std::vector<Jet> ups(k * k * k, Jet(0.0));
  auto dg = [&](std::size_t d, std::size_t i, std::size_t j) {
    return g[i][j].derivative(static_cast<int>(coordinate_slots[d]));
  };
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        Jet s(0.0);
        for (std::size_t d = 0; d < k; ++d) s += ginv[c][d] * (dg(a, d, b) + dg(b, d, a) - dg(d, a, b));
        ups[(c * k + a) * k + b] = 0.5 * s;
      }
    }
  }
  return ups;
}

struct ConstrainedSystem {
  int m = 0;
  int k = 0;
  std::vector<std::string> free_coords;
  std::vector<std::string> constrained_coords;
  AccelerationFn F;
  AccelerationFn Psi;
  UpsilonFn Upsilon;  // empty: all coefficients zero

  int n() const { return m + k; }
  int dim() const { return n() + m + 1; }

  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names{"t"};
    for (const auto& c : free_coords) names.push_back(c);
    for (const auto& c : constrained_coords) names.push_back(c);
    for (const auto& c : free_coords) names.push_back("u_" + c);
    return names;
  }

  /// `upsilon[gamma][alpha][beta]` or `metric[alpha][beta]` (at most one) are
  /// expressions in the constrained coordinates and the parameters.
  static ConstrainedSystem from_expressions(const std::vector<std::string>& free,
                                            const std::vector<std::string>& constrained,
                                            const std::vector<std::string>& F, const std::vector<std::string>& Psi,
                                            const std::map<std::string, double>& params = {},
                                            const std::vector<std::vector<std::vector<std::string>>>& upsilon = {},
                                            const std::vector<std::vector<std::string>>& metric = {}) {
    if (free.empty()) throw std::invalid_argument("a constrained system needs at least one free coordinate");
    if (F.size() != free.size()) {
      throw std::invalid_argument("expected " + std::to_string(free.size()) + " expressions for F, got " +
                                  std::to_string(F.size()));
    }
    if (Psi.size() != constrained.size()) {
      throw std::invalid_argument("expected " + std::to_string(constrained.size()) + " expressions for Psi, got " +
                                  std::to_string(Psi.size()));
    }
    if (!upsilon.empty() && !metric.empty()) throw std::invalid_argument("give either Upsilon or a metric, not both");
    ConstrainedSystem s;
    s.m = static_cast<int>(free.size());
    s.k = static_cast<int>(constrained.size());
    s.free_coords = free;
    s.constrained_coords = constrained;
    auto slots = constrained_slots(free, constrained);
    auto bf = bind_all(F, slots, params);
    auto bp = bind_all(Psi, slots, params);
    s.F = [bf](std::span<const Jet> z) {
      std::vector<Jet> out;
      for (const auto& b : bf) out.push_back(b.eval(z));
      return out;
    };
    s.Psi = [bp](std::span<const Jet> z) {
      std::vector<Jet> out;
      for (const auto& b : bp) out.push_back(b.eval(z));
      return out;
    };

    // Connection coefficients may only depend on the constrained coordinates.
    std::map<std::string, int> base_slots;
    std::vector<std::size_t> base_index;
    for (std::size_t al = 0; al < constrained.size(); ++al) {
      base_slots[constrained[al]] = 1 + s.m + static_cast<int>(al);
      base_index.push_back(static_cast<std::size_t>(1 + s.m) + al);
    }
    const auto K = constrained.size();
    if (!upsilon.empty()) {
      std::vector<BoundExpr> bu;
      if (upsilon.size() != K) throw std::invalid_argument("Upsilon must be a k x k x k array");
      for (const auto& plane : upsilon) {
        if (plane.size() != K) throw std::invalid_argument("Upsilon must be a k x k x k array");
        for (const auto& row : plane) {
          if (row.size() != K) throw std::invalid_argument("Upsilon must be a k x k x k array");
          for (const auto& e : row) bu.emplace_back(parse(e), base_slots, params);
        }
      }
      s.Upsilon = [bu](std::span<const Jet> z) {
        std::vector<Jet> out;
        for (const auto& b : bu) out.push_back(b.eval(z));
        return out;
      };
    } else if (!metric.empty()) {
      std::vector<BoundExpr> bg;
      if (metric.size() != K) throw std::invalid_argument("metric must be a k x k array");
      for (const auto& row : metric) {
        if (row.size() != K) throw std::invalid_argument("metric must be a k x k array");
        for (const auto& e : row) bg.emplace_back(parse(e), base_slots, params);
      }
      s.Upsilon = [bg, K, base_index](std::span<const Jet> z) {
        Matrix<Jet> g(K, std::vector<Jet>(K));
        for (std::size_t i = 0; i < K; ++i) {
          for (std::size_t j = 0; j < K; ++j) g[i][j] = bg[i * K + j].eval(z);
        }
        for (std::size_t i = 0; i < K; ++i) {
          for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(g[i][j].value() - g[j][i].value()) > 1e-12 * (1.0 + std::abs(g[i][j].value()))) {
              throw std::invalid_argument("metric is not symmetric");
            }
          }
        }
        return levi_civita(g, base_index);
      };
    }
    return s;
  }

  /// The unconstrained system viewed as a constrained one with k = 0.
  static ConstrainedSystem from_sode(const SodeSystem& sys) {
    ConstrainedSystem s;
    s.m = sys.n;
    s.k = 0;
    s.free_coords = sys.coords;
    s.F = sys.F;
    s.Psi = [](std::span<const Jet>) { return std::vector<Jet>{}; };
    return s;
  }
};

struct ConstrainedFrame {
  int m = 0, k = 0;
  std::vector<double> point;
  double perturbation = 0.0;
  std::vector<Jet> z;
  std::vector<Jet> F, Psi;
  Matrix<Jet> G;                // G[b][a] = Gamma~^b_a = -1/2 dF^b/du^a
  Matrix<Jet> P;                // P[beta][a] = Psi^beta_a = -dPsi^beta/du^a
  std::vector<Jet> Ups;         // Upsilon^gamma_{alpha beta}
  Matrix<Jet> Phi;              // Phi[b][a] = Phi~^b_a
  Matrix<Jet> K;                // K[alpha][a]
  std::vector<Matrix<Jet>> R;   // R[c][a][b], free-index curvature of F
  std::vector<Matrix<Jet>> Rhat;    // Rhat[c][a][b]
  std::vector<Matrix<Jet>> Rcheck;  // Rcheck[beta][a][b]

  VectorGerm Gamma;
  std::vector<VectorGerm> D, V, H;  // D[alpha] = d/dx^alpha
  CovectorGerm dt;
  std::vector<CovectorGerm> eta, psi, theta;

  Endomorphism P_Gamma, N, P_V, P_H, S, Q;

  int n() const { return m + k; }
  std::size_t dim() const { return static_cast<std::size_t>(n() + m + 1); }
  std::size_t x_index(int a) const { return static_cast<std::size_t>(1 + a); }
  std::size_t c_index(int alpha) const { return static_cast<std::size_t>(1 + m + alpha); }
  std::size_t u_index(int a) const { return static_cast<std::size_t>(1 + n() + a); }
  bool has_curvature() const { return !Phi.empty() || m == 0; }

  const Jet& ups(int g, int a, int b) const {
    return Ups[static_cast<std::size_t>((g * k + a) * k + b)];
  }

  /// Basis slots in the order Gamma~, d/dx^alpha, V~_a, H~_a.
  std::size_t slot_gamma() const { return 0; }
  std::size_t slot_d(int alpha) const { return static_cast<std::size_t>(1 + alpha); }
  std::size_t slot_v(int a) const { return static_cast<std::size_t>(1 + k + a); }
  std::size_t slot_h(int a) const { return static_cast<std::size_t>(1 + k + m + a); }

  AdaptedBasis basis() const {
    AdaptedBasis b;
    b.vectors.push_back(Gamma);
    b.covectors.push_back(dt);
    b.labels.push_back("Gamma");
    for (int al = 0; al < k; ++al) {
      b.vectors.push_back(D[static_cast<std::size_t>(al)]);
      b.covectors.push_back(eta[static_cast<std::size_t>(al)]);
      b.labels.push_back("D" + std::to_string(m + al + 1));
    }
    for (int a = 0; a < m; ++a) {
      b.vectors.push_back(V[static_cast<std::size_t>(a)]);
      b.covectors.push_back(psi[static_cast<std::size_t>(a)]);
      b.labels.push_back("V" + std::to_string(a + 1));
    }
    for (int a = 0; a < m; ++a) {
      b.vectors.push_back(H[static_cast<std::size_t>(a)]);
      b.covectors.push_back(theta[static_cast<std::size_t>(a)]);
      b.labels.push_back("H" + std::to_string(a + 1));
    }
    return b;
  }

  /// R(X, Y) = Rhat^c_ab theta^a(X) theta^b(Y) V_c + Rcheck^beta_ab theta^a(X) theta^b(Y) d_beta.
  VectorGerm curvature_form(const VectorGerm& x, const VectorGerm& y) const {
    VectorGerm r = zero_vector(dim());
    auto sz = [](int i) { return static_cast<std::size_t>(i); };
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        Jet w = pair(theta[sz(a)], x) * pair(theta[sz(b)], y);
        for (int c = 0; c < m; ++c) r += (Rhat[sz(c)][sz(a)][sz(b)] * w) * V[sz(c)];
        for (int be = 0; be < k; ++be) r += (Rcheck[sz(be)][sz(a)][sz(b)] * w) * D[sz(be)];
      }
    }
    return r;
  }
};

inline ConstrainedFrame build_constrained_frame(const ConstrainedSystem& sys, std::span<const double> point,
                                                int order = 3, double perturb = 0.0) {
  if (static_cast<int>(point.size()) != sys.dim()) {
    throw std::invalid_argument("point has " + std::to_string(point.size()) + " coordinates, constraint space has " +
                                std::to_string(sys.dim()));
  }
  if (order < 1 || order > kMaxJetOrder) throw std::invalid_argument("frame order must be in [1, 3]");
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  ConstrainedFrame f;
  const int m = sys.m, k = sys.k;
  f.m = m;
  f.k = k;
  const std::size_t D = f.dim();
  f.point.assign(point.begin(), point.end());
  f.z = coordinate_jets(point, order);
  f.F = sys.F(f.z);
  f.Psi = sys.Psi(f.z);
  if (static_cast<int>(f.F.size()) != m) throw std::invalid_argument("F has the wrong number of components");
  if (static_cast<int>(f.Psi.size()) != k) throw std::invalid_argument("Psi has the wrong number of components");
  if (sys.Upsilon) {
    f.Ups = sys.Upsilon(f.z);
    if (f.Ups.size() != sz(k * k * k)) throw std::invalid_argument("Upsilon has the wrong number of components");
  } else {
    f.Ups.assign(sz(k * k * k), Jet(0.0));
  }

  f.G.assign(sz(m), std::vector<Jet>(sz(m)));
  for (int b = 0; b < m; ++b) {
    for (int a = 0; a < m; ++a) f.G[sz(b)][sz(a)] = -0.5 * f.F[sz(b)].derivative(static_cast<int>(f.u_index(a)));
  }
  f.P.assign(sz(k), std::vector<Jet>(sz(m)));
  for (int be = 0; be < k; ++be) {
    for (int a = 0; a < m; ++a) f.P[sz(be)][sz(a)] = -f.Psi[sz(be)].derivative(static_cast<int>(f.u_index(a)));
  }

  f.Gamma = zero_vector(D);
  f.Gamma[0] = Jet(1.0);
  for (int a = 0; a < m; ++a) {
    f.Gamma[f.x_index(a)] = f.z[f.u_index(a)];
    f.Gamma[f.u_index(a)] = f.F[sz(a)];
  }
  for (int be = 0; be < k; ++be) f.Gamma[f.c_index(be)] = f.Psi[sz(be)];

  for (int al = 0; al < k; ++al) f.D.push_back(coordinate_vector(D, f.c_index(al)));
  for (int a = 0; a < m; ++a) {
    f.V.push_back(coordinate_vector(D, f.u_index(a)));
    VectorGerm h = coordinate_vector(D, f.x_index(a));
    for (int b = 0; b < m; ++b) h[f.u_index(b)] = -f.G[sz(b)][sz(a)];
    for (int be = 0; be < k; ++be) h[f.c_index(be)] = -f.P[sz(be)][sz(a)];
    f.H.push_back(h);
  }

  f.dt = coordinate_covector(D, 0);
  for (int a = 0; a < m; ++a) {
    CovectorGerm th = coordinate_covector(D, f.x_index(a));
    th[0] = -f.z[f.u_index(a)];
    f.theta.push_back(th);
  }
  for (int al = 0; al < k; ++al) {
    // eta^alpha = dx^alpha - Psi^alpha dt + Psi^alpha_b theta^b
    CovectorGerm e = coordinate_covector(D, f.c_index(al));
    e[0] = -f.Psi[sz(al)];
    for (int b = 0; b < m; ++b) e += f.P[sz(al)][sz(b)] * f.theta[sz(b)];
    f.eta.push_back(e);
  }
  for (int a = 0; a < m; ++a) {
    // psi~^a = du^a - F^a dt + Gamma~^a_b theta^b
    CovectorGerm p = coordinate_covector(D, f.u_index(a));
    p[0] = -f.F[sz(a)];
    for (int b = 0; b < m; ++b) p += f.G[sz(a)][sz(b)] * f.theta[sz(b)];
    f.psi.push_back(p);
  }

  f.P_Gamma = Endomorphism(D);
  f.P_Gamma.add(f.Gamma, f.dt);
  f.N = Endomorphism(D);
  for (int al = 0; al < k; ++al) f.N.add(f.D[sz(al)], f.eta[sz(al)]);
  f.P_V = Endomorphism(D);
  f.P_H = Endomorphism(D);
  f.S = Endomorphism(D);
  f.Q = Endomorphism(D);
  for (int a = 0; a < m; ++a) {
    f.P_V.add(f.V[sz(a)], f.psi[sz(a)]);
    f.P_H.add(f.H[sz(a)], f.theta[sz(a)]);
    f.S.add(f.V[sz(a)], f.theta[sz(a)]);
    f.Q.add(f.H[sz(a)], f.psi[sz(a)]);
  }

  if (order >= 2) {
    f.Phi.assign(sz(m), std::vector<Jet>(sz(m)));
    for (int b = 0; b < m; ++b) {
      for (int a = 0; a < m; ++a) {
        Jet v = -f.F[sz(b)].derivative(static_cast<int>(f.x_index(a))) - directional(f.Gamma, f.G[sz(b)][sz(a)]);
        for (int c = 0; c < m; ++c) v -= f.G[sz(c)][sz(a)] * f.G[sz(b)][sz(c)];
        for (int al = 0; al < k; ++al) v += f.P[sz(al)][sz(a)] * f.F[sz(b)].derivative(static_cast<int>(f.c_index(al)));
        f.Phi[sz(b)][sz(a)] = v;
      }
    }
    f.K.assign(sz(k), std::vector<Jet>(sz(m)));
    for (int al = 0; al < k; ++al) {
      for (int a = 0; a < m; ++a) {
        Jet v = -directional(f.Gamma, f.P[sz(al)][sz(a)]) - directional(f.H[sz(a)], f.Psi[sz(al)]);
        for (int b = 0; b < m; ++b) v += f.G[sz(b)][sz(a)] * f.P[sz(al)][sz(b)];
        f.K[sz(al)][sz(a)] = v;
      }
    }
    Matrix<Jet> Fu(sz(m), std::vector<Jet>(sz(m)));
    for (int c = 0; c < m; ++c) {
      for (int l = 0; l < m; ++l) Fu[sz(c)][sz(l)] = f.F[sz(c)].derivative(static_cast<int>(f.u_index(l)));
    }
    f.R.assign(sz(m), Matrix<Jet>(sz(m), std::vector<Jet>(sz(m))));
    f.Rhat = f.R;
    for (int d = 0; d < m; ++d) {
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          Jet v = Fu[sz(d)][sz(b)].derivative(static_cast<int>(f.x_index(a))) -
                  Fu[sz(d)][sz(a)].derivative(static_cast<int>(f.x_index(b)));
          Jet w(0.0);
          for (int c = 0; c < m; ++c) {
            w += Fu[sz(c)][sz(a)] * Fu[sz(d)][sz(c)].derivative(static_cast<int>(f.u_index(b))) -
                 Fu[sz(c)][sz(b)] * Fu[sz(d)][sz(c)].derivative(static_cast<int>(f.u_index(a)));
          }
          Jet r = 0.5 * (v + 0.5 * w);
          f.R[sz(d)][sz(a)][sz(b)] = r;
          for (int be = 0; be < k; ++be) {
            const int cb = static_cast<int>(f.c_index(be));
            r += f.P[sz(be)][sz(a)] * f.G[sz(d)][sz(b)].derivative(cb) -
                 f.P[sz(be)][sz(b)] * f.G[sz(d)][sz(a)].derivative(cb);
          }
          f.Rhat[sz(d)][sz(a)][sz(b)] = r;
        }
      }
    }
    f.Rcheck.assign(sz(k), Matrix<Jet>(sz(m), std::vector<Jet>(sz(m))));
    for (int be = 0; be < k; ++be) {
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          const auto& Pa = f.P[sz(be)][sz(a)];
          const auto& Pb = f.P[sz(be)][sz(b)];
          Jet r = Pa.derivative(static_cast<int>(f.x_index(b))) - Pb.derivative(static_cast<int>(f.x_index(a)));
          for (int c = 0; c < m; ++c) {
            const int uc = static_cast<int>(f.u_index(c));
            r += f.G[sz(c)][sz(a)] * Pb.derivative(uc) - f.G[sz(c)][sz(b)] * Pa.derivative(uc);
          }
          for (int al = 0; al < k; ++al) {
            const int ca = static_cast<int>(f.c_index(al));
            r += f.P[sz(al)][sz(a)] * Pb.derivative(ca) - f.P[sz(al)][sz(b)] * Pa.derivative(ca);
          }
          f.Rcheck[sz(be)][sz(a)][sz(b)] = r;
        }
      }
    }
  }
  if (perturb != 0.0) {
    f.perturbation = perturb;
    for (int a = 0; a < m; ++a) f.Gamma[f.x_index(a)] += Jet(perturb);
    f.P_Gamma = Endomorphism(D);
    f.P_Gamma.add(f.Gamma, f.dt);
  }
  return f;
}

// ---------------------------------------------------------------------------
// The connection.

/// nabla^N_X Y = (X(Y^gamma) + Upsilon^gamma_{alpha beta} X^alpha Y^beta) d_gamma
/// with X^alpha = eta^alpha(X).
inline VectorGerm n_derivative(const ConstrainedFrame& f, const VectorGerm& x, const VectorGerm& y) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  VectorGerm r = zero_vector(f.dim());
  std::vector<Jet> xa, ya;
  for (int al = 0; al < f.k; ++al) {
    xa.push_back(pair(f.eta[sz(al)], x));
    ya.push_back(pair(f.eta[sz(al)], y));
  }
  for (int g = 0; g < f.k; ++g) {
    Jet c = directional(x, ya[sz(g)]);
    for (int al = 0; al < f.k; ++al) {
      for (int be = 0; be < f.k; ++be) c += f.ups(g, al, be) * (xa[sz(al)] * ya[sz(be)]);
    }
    r += c * f.D[sz(g)];
  }
  return r;
}

inline std::vector<GluePart> constrained_parts(const ConstrainedFrame& f) {
  std::vector<GluePart> parts;
  parts.push_back({f.P_Gamma,
                   [gamma = f.Gamma, dt = f.dt](const VectorGerm& x, const VectorGerm& y) {
                     return directional(x, pair(dt, y)) * gamma;
                   },
                   "Gamma"});
  if (f.k > 0) {
    parts.push_back({f.N, [f](const VectorGerm& x, const VectorGerm& y) { return n_derivative(f, x, y); }, "N"});
  }
  parts.push_back({f.P_H, [S = f.S, Q = f.Q](const VectorGerm& x, const VectorGerm& y) { return Q(lie_bracket(x, S(y))); },
                   "H"});
  parts.push_back({f.P_V, [S = f.S, Q = f.Q](const VectorGerm& x, const VectorGerm& y) { return S(lie_bracket(x, Q(y))); },
                   "V"});
  return parts;
}

inline Connection constrained_glued(const ConstrainedFrame& f) {
  return GluedConnection(constrained_parts(f), f.perturbation == 0.0).as_connection();
}

/// The explicit seven-term formula.
inline VectorGerm constrained_covderiv(const ConstrainedFrame& f, const VectorGerm& x, const VectorGerm& y) {
  VectorGerm nx = f.N(x), ny = f.N(y), phx = f.P_H(x), pvx = f.P_V(x);
  VectorGerm r = directional(x, pair(f.dt, y)) * f.Gamma;
  if (f.k > 0) {
    r += n_derivative(f, nx, ny);
    r += f.N(lie_bracket(x - nx, ny));
  }
  r += f.Q(lie_bracket(phx, f.S(y)));
  r += f.S(lie_bracket(pvx, f.Q(y)));
  r += f.P_H(lie_bracket(x - phx, f.P_H(y)));
  r += f.P_V(lie_bracket(x - pvx, f.P_V(y)));
  return r;
}

inline Connection constrained_explicit(const ConstrainedFrame& f) {
  return [f](const VectorGerm& x, const VectorGerm& y) { return constrained_covderiv(f, x, y); };
}

using FrameTable = std::vector<std::vector<VectorGerm>>;

/// Nonzero basis components nabla_{e_A} e_B.
inline FrameTable constrained_components(const ConstrainedFrame& f) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  const std::size_t N = f.dim();
  FrameTable t(N, std::vector<VectorGerm>(N, zero_vector(N)));
  const int m = f.m, k = f.k;
  for (int a = 0; a < m; ++a) {
    VectorGerm gh = zero_vector(N), gv = zero_vector(N);
    for (int b = 0; b < m; ++b) {
      gh += f.G[sz(b)][sz(a)] * f.H[sz(b)];
      gv += f.G[sz(b)][sz(a)] * f.V[sz(b)];
    }
    t[f.slot_gamma()][f.slot_h(a)] = gh;
    t[f.slot_gamma()][f.slot_v(a)] = gv;
    for (int b = 0; b < m; ++b) {
      VectorGerm hh = zero_vector(N), hv = zero_vector(N);
      for (int c = 0; c < m; ++c) {
        Jet coef = f.G[sz(c)][sz(a)].derivative(static_cast<int>(f.u_index(b)));
        hh += coef * f.H[sz(c)];
        hv += coef * f.V[sz(c)];
      }
      t[f.slot_h(a)][f.slot_h(b)] = hh;
      t[f.slot_h(a)][f.slot_v(b)] = hv;
    }
    for (int al = 0; al < k; ++al) {
      VectorGerm hd = zero_vector(N);
      for (int be = 0; be < k; ++be) {
        hd += f.P[sz(be)][sz(a)].derivative(static_cast<int>(f.c_index(al))) * f.D[sz(be)];
      }
      t[f.slot_h(a)][f.slot_d(al)] = hd;
    }
  }
  for (int al = 0; al < k; ++al) {
    VectorGerm gd = zero_vector(N);
    for (int be = 0; be < k; ++be) gd -= f.Psi[sz(be)].derivative(static_cast<int>(f.c_index(al))) * f.D[sz(be)];
    t[f.slot_gamma()][f.slot_d(al)] = gd;
    for (int be = 0; be < k; ++be) {
      VectorGerm dd = zero_vector(N);
      for (int g = 0; g < k; ++g) dd += f.ups(g, al, be) * f.D[sz(g)];
      t[f.slot_d(al)][f.slot_d(be)] = dd;
    }
  }
  return t;
}

inline Connection constrained_from_components(const ConstrainedFrame& f) {
  return table_connection(f.basis(), constrained_components(f));
}

/// Expected torsion on basis pairs.
inline FrameTable constrained_torsion_table(const ConstrainedFrame& f) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  const std::size_t N = f.dim();
  const int m = f.m, k = f.k;
  FrameTable t(N, std::vector<VectorGerm>(N, zero_vector(N)));
  auto set = [&](std::size_t a, std::size_t b, const VectorGerm& v) {
    t[a][b] = v;
    t[b][a] = -v;
  };
  for (int a = 0; a < m; ++a) {
    set(f.slot_gamma(), f.slot_v(a), f.H[sz(a)]);
    VectorGerm th = zero_vector(N);
    for (int b = 0; b < m; ++b) th -= f.Phi[sz(b)][sz(a)] * f.V[sz(b)];
    for (int al = 0; al < k; ++al) th -= f.K[sz(al)][sz(a)] * f.D[sz(al)];
    set(f.slot_gamma(), f.slot_h(a), th);
    for (int b = 0; b < m; ++b) {
      VectorGerm vh = zero_vector(N);
      for (int al = 0; al < k; ++al) {
        vh += f.P[sz(al)][sz(b)].derivative(static_cast<int>(f.u_index(a))) * f.D[sz(al)];
      }
      set(f.slot_v(a), f.slot_h(b), vh);
      if (a < b) {
        VectorGerm hh = zero_vector(N);
        for (int c = 0; c < m; ++c) hh -= f.Rhat[sz(c)][sz(a)][sz(b)] * f.V[sz(c)];
        for (int be = 0; be < k; ++be) hh -= f.Rcheck[sz(be)][sz(a)][sz(b)] * f.D[sz(be)];
        set(f.slot_h(a), f.slot_h(b), hh);
      }
    }
    for (int al = 0; al < k; ++al) {
      VectorGerm hd = zero_vector(N);
      for (int b = 0; b < m; ++b) hd -= f.G[sz(b)][sz(a)].derivative(static_cast<int>(f.c_index(al))) * f.V[sz(b)];
      set(f.slot_h(a), f.slot_d(al), hd);
    }
  }
  for (int al = 0; al < k; ++al) {
    VectorGerm gd = zero_vector(N);
    for (int c = 0; c < m; ++c) gd += f.F[sz(c)].derivative(static_cast<int>(f.c_index(al))) * f.V[sz(c)];
    set(f.slot_gamma(), f.slot_d(al), gd);
    for (int be = al + 1; be < k; ++be) {
      VectorGerm dd = zero_vector(N);
      for (int g = 0; g < k; ++g) dd += (f.ups(g, al, be) - f.ups(g, be, al)) * f.D[sz(g)];
      set(f.slot_d(al), f.slot_d(be), dd);
    }
  }
  return t;
}

/// Expected Lie brackets of basis fields.
inline FrameTable constrained_bracket_table(const ConstrainedFrame& f) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  const std::size_t N = f.dim();
  const int m = f.m, k = f.k;
  FrameTable t(N, std::vector<VectorGerm>(N, zero_vector(N)));
  auto set = [&](std::size_t a, std::size_t b, const VectorGerm& v) {
    t[a][b] = v;
    t[b][a] = -v;
  };
  for (int a = 0; a < m; ++a) {
    VectorGerm gh = zero_vector(N), gv = -f.H[sz(a)];
    for (int b = 0; b < m; ++b) {
      gh += f.Phi[sz(b)][sz(a)] * f.V[sz(b)] + f.G[sz(b)][sz(a)] * f.H[sz(b)];
      gv += f.G[sz(b)][sz(a)] * f.V[sz(b)];
    }
    for (int al = 0; al < k; ++al) gh += f.K[sz(al)][sz(a)] * f.D[sz(al)];
    set(f.slot_gamma(), f.slot_h(a), gh);
    set(f.slot_gamma(), f.slot_v(a), gv);
    for (int b = 0; b < m; ++b) {
      VectorGerm hv = zero_vector(N);
      for (int c = 0; c < m; ++c) hv += f.G[sz(c)][sz(a)].derivative(static_cast<int>(f.u_index(b))) * f.V[sz(c)];
      for (int al = 0; al < k; ++al) {
        hv += f.P[sz(al)][sz(a)].derivative(static_cast<int>(f.u_index(b))) * f.D[sz(al)];
      }
      set(f.slot_h(a), f.slot_v(b), hv);
      if (a < b) {
        VectorGerm hh = zero_vector(N);
        for (int c = 0; c < m; ++c) hh += f.Rhat[sz(c)][sz(a)][sz(b)] * f.V[sz(c)];
        for (int be = 0; be < k; ++be) hh += f.Rcheck[sz(be)][sz(a)][sz(b)] * f.D[sz(be)];
        set(f.slot_h(a), f.slot_h(b), hh);
      }
    }
    for (int al = 0; al < k; ++al) {
      const int ca = static_cast<int>(f.c_index(al));
      VectorGerm hd = zero_vector(N);
      for (int b = 0; b < m; ++b) hd += f.G[sz(b)][sz(a)].derivative(ca) * f.V[sz(b)];
      for (int be = 0; be < k; ++be) hd += f.P[sz(be)][sz(a)].derivative(ca) * f.D[sz(be)];
      set(f.slot_h(a), f.slot_d(al), hd);
    }
  }
  for (int al = 0; al < k; ++al) {
    const int ca = static_cast<int>(f.c_index(al));
    VectorGerm gd = zero_vector(N);
    for (int be = 0; be < k; ++be) gd -= f.Psi[sz(be)].derivative(ca) * f.D[sz(be)];
    for (int c = 0; c < m; ++c) gd -= f.F[sz(c)].derivative(ca) * f.V[sz(c)];
    set(f.slot_gamma(), f.slot_d(al), gd);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Shape map of Gamma~ and the eigencondition.

struct ConstrainedEigenspace {
  double mu = 0.0;
  int multiplicity = 1;              // as a root of the determinant polynomial (0 if only from the kernel)
  Eigen::MatrixXd frame_vectors;     // columns: adapted-basis components
  Eigen::MatrixXd coordinate_vectors;
  double equation_residual = 0.0;    // three component equations
};

struct DecouplingReport {
  int alpha = 0;
  double shape_of_gamma = 0.0;       // max |A_{d_alpha}(Gamma~)|
  double coefficient_size = 0.0;     // max(|dPsi/dx^alpha|, |dF/dx^alpha|)
  double shape_of_horizontal = 0.0;  // max_a |A_{d_alpha}(H~_a)|
  bool shape_vanishes = false;
  bool coefficients_vanish = false;
};

struct ConstrainedShape {
  Eigen::MatrixXd A;                     // frame matrix, column B = A(e_B)
  std::vector<double> polynomial;        // det(mu^3 I + Lambda_mu), ascending coefficients
  double leading_coefficient_error = 0.0;
  int zero_root_multiplicity = 0;
  std::vector<double> real_roots;        // with multiplicity, sorted
  std::vector<ConstrainedEigenspace> eigenspaces;
  std::vector<DecouplingReport> decoupling;
};

inline constexpr double kDecouplingTolerance = 1e-10;

/// Lambda_mu = K^alpha_b dF^a/dx^alpha + mu Phi~^a_b at the point.
inline Eigen::MatrixXd lambda_matrix(const ConstrainedFrame& f, double mu) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  Eigen::MatrixXd L(f.m, f.m);
  for (int a = 0; a < f.m; ++a) {
    for (int b = 0; b < f.m; ++b) {
      double v = mu * f.Phi[sz(a)][sz(b)].value();
      for (int al = 0; al < f.k; ++al) {
        v += f.K[sz(al)][sz(b)].value() * f.F[sz(a)].derivative(static_cast<int>(f.c_index(al))).value();
      }
      L(a, b) = v;
    }
  }
  return L;
}

/// Frame matrix of A_Gamma~ from the closed form.
inline Eigen::MatrixXd constrained_shape_matrix(const ConstrainedFrame& f) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  const auto N = static_cast<Eigen::Index>(f.dim());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  auto I = [](std::size_t s) { return static_cast<Eigen::Index>(s); };
  for (int a = 0; a < f.m; ++a) {
    A(I(f.slot_h(a)), I(f.slot_v(a))) = 1.0;
    for (int b = 0; b < f.m; ++b) A(I(f.slot_v(b)), I(f.slot_h(a))) = -f.Phi[sz(b)][sz(a)].value();
    for (int al = 0; al < f.k; ++al) A(I(f.slot_d(al)), I(f.slot_h(a))) = -f.K[sz(al)][sz(a)].value();
  }
  for (int al = 0; al < f.k; ++al) {
    for (int c = 0; c < f.m; ++c) {
      A(I(f.slot_v(c)), I(f.slot_d(al))) = f.F[sz(c)].derivative(static_cast<int>(f.c_index(al))).value();
    }
  }
  return A;
}

/// Residual of mu X^alpha = -Xbar^a K^alpha_a, mu Xbar^a = Xhat^a,
/// mu Xhat^b = X^alpha dF^b/dx^alpha - Phi~^b_a Xbar^a for frame components x.
inline double eigen_equation_residual(const ConstrainedFrame& f, double mu, const Eigen::VectorXd& x) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  auto I = [](std::size_t s) { return static_cast<Eigen::Index>(s); };
  double r = 0.0;
  double scale = 1.0 + x.cwiseAbs().maxCoeff();
  for (int al = 0; al < f.k; ++al) {
    double rhs = 0.0;
    for (int a = 0; a < f.m; ++a) rhs -= x(I(f.slot_h(a))) * f.K[sz(al)][sz(a)].value();
    r = std::max(r, std::abs(mu * x(I(f.slot_d(al))) - rhs));
  }
  for (int a = 0; a < f.m; ++a) r = std::max(r, std::abs(mu * x(I(f.slot_h(a))) - x(I(f.slot_v(a)))));
  for (int b = 0; b < f.m; ++b) {
    double rhs = 0.0;
    for (int al = 0; al < f.k; ++al) {
      rhs += x(I(f.slot_d(al))) * f.F[sz(b)].derivative(static_cast<int>(f.c_index(al))).value();
    }
    for (int a = 0; a < f.m; ++a) rhs -= f.Phi[sz(b)][sz(a)].value() * x(I(f.slot_h(a)));
    r = std::max(r, std::abs(mu * x(I(f.slot_v(b))) - rhs));
  }
  r = std::max(r, std::abs(mu * x(I(f.slot_gamma()))));
  return r / scale;
}

/// Coefficients (ascending) of det(mu^3 I + Lambda_mu), by interpolation at
/// mu = 0, 1, -1, 2, -2, ...
inline std::vector<double> lambda_polynomial(const ConstrainedFrame& f) {
  const int deg = 3 * f.m;
  std::vector<double> nodes, values;
  for (int i = 0; static_cast<int>(nodes.size()) < deg + 1; ++i) {
    for (double mu : {static_cast<double>(i), -static_cast<double>(i)}) {
      if (static_cast<int>(nodes.size()) == deg + 1) break;
      if (i == 0 && mu == 0.0 && !nodes.empty()) continue;
      Eigen::MatrixXd M = lambda_matrix(f, mu) + mu * mu * mu * Eigen::MatrixXd::Identity(f.m, f.m);
      nodes.push_back(mu);
      values.push_back(f.m == 0 ? 1.0 : M.determinant());
      if (i == 0) break;
    }
  }
  return interpolate_polynomial(nodes, values);
}

inline ConstrainedShape constrained_shape(const ConstrainedFrame& f, double root_imag_tol = 1e-8) {
  if (!f.has_curvature()) throw std::logic_error("shape map needs a frame built with order >= 2");
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  ConstrainedShape out;
  out.A = constrained_shape_matrix(f);
  out.polynomial = lambda_polynomial(f);
  out.leading_coefficient_error = std::abs(out.polynomial.back() - 1.0);

  // Factor out mu^z where the low-order coefficients vanish numerically; a
  // repeated zero root is ill-conditioned for the companion matrix.
  double cmax = 0.0;
  for (double c : out.polynomial) cmax = std::max(cmax, std::abs(c));
  std::vector<double> reduced = out.polynomial;
  while (reduced.size() > 1 && std::abs(reduced.front()) <= 1e-10 * std::max(1.0, cmax)) {
    reduced.erase(reduced.begin());
    ++out.zero_root_multiplicity;
  }
  std::vector<double> roots = real_polynomial_roots(reduced, root_imag_tol);
  for (int i = 0; i < out.zero_root_multiplicity; ++i) roots.push_back(0.0);
  std::sort(roots.begin(), roots.end());
  out.real_roots = roots;

  auto clusters = cluster(roots);
  bool have_zero = false;
  for (const auto& c : clusters) have_zero = have_zero || std::abs(c.first) <= 1e-6;
  if (!have_zero) clusters.insert(clusters.begin(), {0.0, 0});
  std::sort(clusters.begin(), clusters.end());

  AdaptedBasis basis = f.basis();
  const auto N = static_cast<Eigen::Index>(f.dim());
  Eigen::MatrixXd to_coords(N, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    for (Eigen::Index r = 0; r < N; ++r) to_coords(r, c) = basis.vectors[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)].value();
  }
  for (auto [mu, mult] : clusters) {
    if (std::abs(mu) <= 1e-6) mu = 0.0;
    ConstrainedEigenspace e;
    e.mu = mu;
    e.multiplicity = mult;
    e.frame_vectors = null_space(out.A - mu * Eigen::MatrixXd::Identity(N, N));
    e.coordinate_vectors = to_coords * e.frame_vectors;
    for (Eigen::Index c = 0; c < e.frame_vectors.cols(); ++c) {
      e.equation_residual = std::max(e.equation_residual, eigen_equation_residual(f, mu, e.frame_vectors.col(c)));
    }
    out.eigenspaces.push_back(e);
  }

  Connection nabla = constrained_glued(f);
  for (int al = 0; al < f.k; ++al) {
    DecouplingReport d;
    d.alpha = al;
    d.shape_of_gamma = max_abs(shape_map(nabla, f.D[sz(al)], f.Gamma));
    for (int be = 0; be < f.k; ++be) {
      d.coefficient_size = std::max(d.coefficient_size, max_abs(f.Psi[sz(be)].derivative(static_cast<int>(f.c_index(al)))));
    }
    for (int c = 0; c < f.m; ++c) {
      d.coefficient_size = std::max(d.coefficient_size, max_abs(f.F[sz(c)].derivative(static_cast<int>(f.c_index(al)))));
    }
    for (int a = 0; a < f.m; ++a) {
      d.shape_of_horizontal = std::max(d.shape_of_horizontal, max_abs(shape_map(nabla, f.D[sz(al)], f.H[sz(a)])));
    }
    d.shape_vanishes = d.shape_of_gamma <= kDecouplingTolerance;
    d.coefficients_vanish = d.coefficient_size <= kDecouplingTolerance;
    out.decoupling.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Connection on the constraint bundle determined by Psi.

struct ChetaevConnection {
  std::vector<Jet> sigma;              // sigma^alpha = Psi^alpha + u^b Psi^alpha_b
  Matrix<Jet> sigma_b;                 // sigma^alpha_b = -Psi^alpha_b
  VectorGerm time_field;               // d_t + sigma^alpha d_alpha
  std::vector<VectorGerm> position_fields;  // d_b - Psi^alpha_b d_alpha
  std::vector<VectorGerm> velocity_fields;  // d_{u^a}
  double u_dependence = 0.0;           // max |d sigma / d u| at the point
  bool affine = false;
};

inline ChetaevConnection chetaev_connection(const ConstrainedFrame& f, double tol = 1e-12) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  ChetaevConnection c;
  const std::size_t D = f.dim();
  c.sigma_b.assign(sz(f.k), std::vector<Jet>(sz(f.m)));
  c.time_field = coordinate_vector(D, 0);
  for (int al = 0; al < f.k; ++al) {
    Jet s = f.Psi[sz(al)];
    for (int b = 0; b < f.m; ++b) {
      s += f.z[f.u_index(b)] * f.P[sz(al)][sz(b)];
      c.sigma_b[sz(al)][sz(b)] = -f.P[sz(al)][sz(b)];
    }
    c.sigma.push_back(s);
    c.time_field[f.c_index(al)] = s;
  }
  for (int b = 0; b < f.m; ++b) {
    VectorGerm h = coordinate_vector(D, f.x_index(b));
    for (int al = 0; al < f.k; ++al) h[f.c_index(al)] = -f.P[sz(al)][sz(b)];
    c.position_fields.push_back(h);
    c.velocity_fields.push_back(coordinate_vector(D, f.u_index(b)));
  }
  double scale = 1.0;
  for (int al = 0; al < f.k; ++al) {
    scale = std::max(scale, std::abs(c.sigma[sz(al)].value()));
    for (int a = 0; a < f.m; ++a) {
      const int ua = static_cast<int>(f.u_index(a));
      if (c.sigma[sz(al)].order() >= 1) c.u_dependence = std::max(c.u_dependence, std::abs(c.sigma[sz(al)].derivative(ua).value()));
      for (int b = 0; b < f.m; ++b) {
        const auto& sb = c.sigma_b[sz(al)][sz(b)];
        if (sb.order() >= 1) c.u_dependence = std::max(c.u_dependence, std::abs(sb.derivative(ua).value()));
      }
    }
  }
  c.affine = c.u_dependence <= tol * scale;
  return c;
}

// ---------------------------------------------------------------------------
// Residual suite.

/// Duality, eigenstructure of L_Gamma~ S, connection consistency, the
/// eleven characterizing properties, Phi~/R^ and K/R-check identities, basis
/// brackets, torsion table, shape map and eigen-system equivalence.
inline ResidualMap verify_constrained(const ConstrainedSystem& sys, std::span<const double> point, std::mt19937_64& rng,
                                      int nfields = 3, double perturb = 0.0) {
  auto sz = [](int i) { return static_cast<std::size_t>(i); };
  ResidualMap res;
  ConstrainedFrame f = build_constrained_frame(sys, point, 3, perturb);
  const int m = f.m, k = f.k;
  const std::size_t N = f.dim();
  AdaptedBasis basis = f.basis();
  auto parts = constrained_parts(f);
  record(res, "frame.duality", basis.duality_residual());
  record(res, "frame.decomposition", decomposition_residual(parts));

  record(res, "lie_gamma_S.gamma", max_abs(lie_derivative(f.Gamma, f.S, f.Gamma)) / scale_of({&f.Gamma}));
  for (int al = 0; al < k; ++al) record(res, "lie_gamma_S.constraint", max_abs(lie_derivative(f.Gamma, f.S, f.D[sz(al)])));
  for (int a = 0; a < m; ++a) {
    record(res, "lie_gamma_S.vertical", relative_residual(lie_derivative(f.Gamma, f.S, f.V[sz(a)]), f.V[sz(a)]));
    record(res, "lie_gamma_S.horizontal", relative_residual(lie_derivative(f.Gamma, f.S, f.H[sz(a)]), -f.H[sz(a)]));
  }

  Connection glued = GluedConnection(parts, false).as_connection();
  Connection explicit_form = constrained_explicit(f);
  Connection table = constrained_from_components(f);

  for (int trial = 0; trial < nfields; ++trial) {
    VectorGerm x = random_field(rng, f.z), y = random_field(rng, f.z), w = random_field(rng, f.z);
    VectorGerm g = glued(x, y);
    auto ax = axiom_residuals(glued, random_function(rng, f.z), x, y);
    record(res, "axioms.function_linearity", ax.function_linearity);
    record(res, "axioms.leibniz", ax.leibniz);
    record(res, "connection.explicit_vs_glued", relative_residual(explicit_form(x, y), g));
    record(res, "connection.components_vs_explicit", relative_residual(table(x, y), explicit_form(x, y)));

    record(res, "thm.nabla_gamma", rel_norm(glued(x, f.Gamma), {&x}));
    record(res, "thm.nabla_dt", std::abs(covariant_derivative(glued, f.dt, x, y).value()) / scale_of({&x, &y}));
    record(res, "thm.nabla_S", rel_norm(covariant_derivative(glued, f.S, x, y), {&x, &y}));
    record(res, "thm.nabla_Q", rel_norm(covariant_derivative(glued, f.Q, x, y), {&x, &y}));
    record(res, "thm.horizontal_from_torsion", relative_residual(f.P_H(x), torsion(glued, f.Gamma, f.S(x))));
    record(res, "thm.vertical_from_torsion", relative_residual(f.P_V(x), f.S(torsion(glued, f.Gamma, x))));
    record(res, "thm.nabla_N", rel_norm(covariant_derivative(glued, f.N, x, y), {&x, &y}));
    VectorGerm ix = x - f.N(x), ny = f.N(y);
    VectorGerm tq = torsion(glued, ix, ny);
    record(res, "thm.mixed_torsion", rel_norm(tq - f.P_V(tq), {&x, &y}));
    for (int a = 0; a < m; ++a) {
      record(res, "thm.curvature_gamma_vertical", rel_norm(curvature(glued, f.Gamma, f.V[sz(a)], w), {&w}));
    }

    Endomorphism shape_closed(N);
    {
      Eigen::MatrixXd A = constrained_shape_matrix(f);
      for (std::size_t b = 0; b < N; ++b) {
        VectorGerm col = zero_vector(N);
        for (std::size_t a = 0; a < N; ++a) {
          double v = A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          if (v != 0.0) col += Jet(v) * basis.vectors[a];
        }
        shape_closed.add(col, basis.covectors[b]);
      }
    }
    record(res, "shape.gamma_formula", relative_residual(shape_map(glued, f.Gamma, x), shape_closed(x)));
    record(res, "shape.representations",
           relative_residual(shape_map(glued, x, y, ShapeMode::kBracket), shape_map(glued, x, y, ShapeMode::kTorsion)));
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) record(res, "thm.vertical_vertical", max_abs(glued(f.V[sz(a)], f.V[sz(b)])));
  }
  for (int al = 0; al < k; ++al) {
    for (int be = 0; be < k; ++be) {
      VectorGerm want = zero_vector(N);
      for (int g = 0; g < k; ++g) want += f.ups(g, al, be) * f.D[sz(g)];
      record(res, "thm.constraint_coefficients", relative_residual(glued(f.D[sz(al)], f.D[sz(be)]), want));
    }
  }

  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) {
        Jet lhs = directional(f.V[sz(a)], f.Phi[sz(c)][sz(b)]) - directional(f.V[sz(b)], f.Phi[sz(c)][sz(a)]);
        record(res, "curvature.phi_identity", relative_residual(lhs, 3.0 * f.Rhat[sz(c)][sz(a)][sz(b)]));
      }
      for (int al = 0; al < k; ++al) {
        Jet lhs = directional(f.V[sz(a)], f.K[sz(al)][sz(b)]) - directional(f.V[sz(b)], f.K[sz(al)][sz(a)]);
        record(res, "curvature.k_identity", relative_residual(lhs, 2.0 * f.Rcheck[sz(al)][sz(a)][sz(b)]));
      }
    }
  }

  auto brackets = constrained_bracket_table(f);
  auto torsions = constrained_torsion_table(f);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      record(res, "brackets.table", relative_residual(lie_bracket(basis.vectors[a], basis.vectors[b]), brackets[a][b]));
      record(res, "torsion.table", relative_residual(torsion(glued, basis.vectors[a], basis.vectors[b]), torsions[a][b]));
    }
  }

  if (perturb == 0.0) {
    ConstrainedShape shape = constrained_shape(f);
    record(res, "shape.leading_coefficient", shape.leading_coefficient_error);
    for (const auto& e : shape.eigenspaces) record(res, "shape.eigen_equations", e.equation_residual);
  }
  return res;
}

}  // namespace sodegeo
