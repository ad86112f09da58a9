#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sodegeo/constrained.hpp"

using namespace sodegeo;

namespace {

ConstrainedSystem knife_edge() {
  return ConstrainedSystem::from_expressions({"phi", "x"}, {"y"}, {"0", "-u_phi*u_x*tan(phi)"}, {"tan(phi)*u_x"});
}

const char* kBallPsi4 = "r/R*(u_theta*sin(beta-varphi) + u_psi*sin(theta)*cos(varphi-beta))";
const char* kBallPsi5 =
    "-r/R*(u_varphi + u_psi*(cos(theta) + cot(alpha)*sin(theta)*sin(beta-varphi)) - u_theta*cot(alpha)*cos(varphi-beta))";

// Rolling-ball constraints and base metric with a stand-in for the reduced
// accelerations; every identity holds for arbitrary F.
ConstrainedSystem ball_like() {
  return ConstrainedSystem::from_expressions(
      {"varphi", "psi", "theta"}, {"alpha", "beta"},
      {"u_psi*u_theta*sin(theta) - 0.3*u_varphi*cos(alpha)", "u_varphi*u_theta/sin(theta) + sin(beta)*u_psi",
       "-u_psi*u_varphi*sin(theta) + 0.2*u_theta*u_theta*cos(beta)"},
      {kBallPsi4, kBallPsi5}, {{"r", 0.3}, {"R", 2.0}}, {},
      {{"R*R", "0"}, {"0", "R*R*sin(alpha)^2"}});
}

// Constraint depending on constrained coordinates and nonlinearly on u.
ConstrainedSystem curved() {
  return ConstrainedSystem::from_expressions(
      {"x", "y"}, {"z", "w"}, {"-u_x*u_y*z + sin(t)", "u_x*u_x*cos(w) - x*u_y"},
      {"u_x*u_y*w + z*sin(x)", "exp(0.3*u_x)*cos(z) + t*u_y*u_y"}, {},
      {{{"z", "w"}, {"0.5", "z*w"}}, {{"sin(w)", "0"}, {"1", "-z"}}});
}

std::vector<double> knife_point(double phi, double uphi, double ux) { return {0.2, phi, -0.4, 0.7, uphi, ux}; }

std::vector<double> random_point(std::mt19937_64& rng, int dim, double lo = -0.8, double hi = 0.8) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> p;
  for (int i = 0; i < dim; ++i) p.push_back(u(rng));
  return p;
}

std::vector<double> ball_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.4, 2.6), u(-1.0, 1.0);
  // t, varphi, psi, theta, alpha, beta, u_varphi, u_psi, u_theta
  return {u(rng), ang(rng), ang(rng), ang(rng), ang(rng), ang(rng), u(rng), u(rng), u(rng)};
}

}  // namespace

TEST(ConstrainedFrame, KnifeEdgeClosedForms) {
  std::mt19937_64 rng(201);
  std::uniform_real_distribution<double> phi_d(-1.2, 1.2), u_d(-2.0, 2.0);
  auto sys = knife_edge();
  for (int i = 0; i < 20; ++i) {
    double phi = phi_d(rng), uphi = u_d(rng), ux = u_d(rng);
    auto f = build_constrained_frame(sys, knife_point(phi, uphi, ux));
    double sec2 = 1.0 / (std::cos(phi) * std::cos(phi)), tn = std::tan(phi);
    // Hand derivation: Gamma~^2_1 = u_x tan/2, Gamma~^2_2 = u_phi tan/2, Psi^3_2 = -tan.
    EXPECT_NEAR(f.G[1][0].value(), 0.5 * ux * tn, 1e-14);
    EXPECT_NEAR(f.G[1][1].value(), 0.5 * uphi * tn, 1e-14);
    EXPECT_NEAR(f.P[0][1].value(), -tn, 1e-14);
    double phi22 = -uphi * uphi * (0.5 * sec2 + 0.25 * tn * tn);
    double phi21 = uphi * ux * (0.5 * sec2 + 0.25 * tn * tn);
    EXPECT_NEAR(f.Phi[1][1].value(), phi22, 1e-12 * (1 + std::abs(phi22)));
    EXPECT_NEAR(f.Phi[1][0].value(), phi21, 1e-12 * (1 + std::abs(phi21)));
    EXPECT_NEAR(f.Phi[0][0].value(), 0.0, 1e-14);
    EXPECT_NEAR(f.Phi[0][1].value(), 0.0, 1e-14);
    EXPECT_NEAR(f.K[0][0].value(), -sec2 * ux, 1e-12 * sec2);
    EXPECT_NEAR(f.K[0][1].value(), sec2 * uphi, 1e-12 * sec2);
    // The same value in its (cos 2phi - 5) form.
    EXPECT_NEAR(f.Phi[1][1].value(), 0.125 * uphi * uphi * (std::cos(2 * phi) - 5) * sec2, 1e-12 * (1 + std::abs(phi22)));
  }
}

TEST(ConstrainedFrame, VelocityFreeConstraintHasNoCorrection) {
  auto sys = ConstrainedSystem::from_expressions({"x"}, {"y"}, {"-x*u_x"}, {"sin(x) + y"});
  auto f = build_constrained_frame(sys, std::vector<double>{0.0, 0.3, 0.2, 0.5});
  EXPECT_EQ(f.P[0][0].value(), 0.0);
  EXPECT_EQ(f.H[0][f.c_index(0)].value(), 0.0);
  EXPECT_EQ(f.Rcheck.size(), 1u);
  EXPECT_EQ(f.Rcheck[0][0][0].value(), 0.0);
}

TEST(ConstrainedFrame, RejectsVelocityOfConstrainedCoordinate) {
  EXPECT_THROW(ConstrainedSystem::from_expressions({"x"}, {"y"}, {"u_y"}, {"u_x"}), BindError);
  EXPECT_THROW(ConstrainedSystem::from_expressions({"x"}, {"y"}, {"0"}, {"u_x"}, {}, {{{"x"}}}), BindError);
}

TEST(ConstrainedFrame, SphereMetricCoefficients) {
  auto sys = ball_like();
  std::mt19937_64 rng(202);
  for (int i = 0; i < 20; ++i) {
    auto p = ball_point(rng);
    auto f = build_constrained_frame(sys, p);
    double al = p[4];
    EXPECT_NEAR(f.ups(0, 1, 1).value(), -std::sin(al) * std::cos(al), 1e-12);
    EXPECT_NEAR(f.ups(1, 0, 1).value(), std::cos(al) / std::sin(al), 1e-12);
    EXPECT_NEAR(f.ups(1, 1, 0).value(), std::cos(al) / std::sin(al), 1e-12);
    EXPECT_NEAR(f.ups(0, 0, 0).value(), 0.0, 1e-12);
    EXPECT_NEAR(f.ups(1, 1, 1).value(), 0.0, 1e-12);
    EXPECT_NEAR(f.ups(0, 0, 1).value(), 0.0, 1e-12);
  }
}

TEST(ConstrainedConnection, KnifeEdgeComponents) {
  auto sys = knife_edge();
  auto f = build_constrained_frame(sys, knife_point(0.4, 0.9, -0.6));
  auto nabla = constrained_explicit(f);
  const VectorGerm& dy = f.D[0];
  EXPECT_LE(max_abs(nabla(f.Gamma, dy)), 1e-14);
  EXPECT_LE(max_abs(nabla(f.H[0], dy)), 1e-14);
  EXPECT_LE(max_abs(nabla(f.H[1], dy)), 1e-14);
  EXPECT_LE(max_abs(nabla(dy, dy)), 1e-14);
  // d Gamma~^2_1 / du_x = tan/2.
  const double half_tan = 0.5 * std::tan(0.4);
  EXPECT_LE(relative_residual(nabla(f.H[0], f.H[1]), Jet(half_tan) * f.H[1]), 1e-13);
  EXPECT_LE(relative_residual(nabla(f.H[1], f.V[0]), Jet(half_tan) * f.V[1]), 1e-13);
}

TEST(ConstrainedConnection, ExplicitGluedAndComponentsAgree) {
  std::mt19937_64 rng(203);
  const std::vector<ConstrainedSystem> systems{knife_edge(), ball_like(), curved()};
  for (int trial = 0; trial < 30; ++trial) {
    const auto& sys = systems[static_cast<std::size_t>(trial) % systems.size()];
    auto p = trial % 3 == 1 ? ball_point(rng) : random_point(rng, sys.dim());
    auto f = build_constrained_frame(sys, p);
    auto glued = constrained_glued(f);
    auto table = constrained_from_components(f);
    VectorGerm x = random_field(rng, f.z), y = random_field(rng, f.z);
    EXPECT_LE(relative_residual(constrained_covderiv(f, x, y), glued(x, y)), 1e-9);
    EXPECT_LE(relative_residual(table(x, y), glued(x, y)), 1e-9);
  }
}

TEST(ConstrainedConnection, ReducesToUnconstrainedWithoutConstraints) {
  std::mt19937_64 rng(204);
  auto sys = SodeSystem::from_expressions({"x", "y"}, {"-u_x*u_x*y + sin(t)*u_y", "x*u_x*u_y - cos(y)*u_y*u_y"});
  auto csys = ConstrainedSystem::from_sode(sys);
  for (int i = 0; i < 10; ++i) {
    auto p = random_point(rng, sys.dim());
    auto uf = build_frame(sys, p);
    auto cf = build_constrained_frame(csys, p);
    VectorGerm x = random_field(rng, uf.z), y = random_field(rng, uf.z);
    EXPECT_LE(max_abs_diff(constrained_covderiv(cf, x, y), mp_covderiv(uf, x, y)), 1e-12);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) EXPECT_LE(std::abs(cf.Phi[a][b].value() - uf.Phi[a][b].value()), 1e-12);
    }
  }
}

TEST(ConstrainedProperties, SuiteHoldsOnSeveralSystems) {
  std::mt19937_64 rng(205);
  const std::vector<ConstrainedSystem> systems{knife_edge(), ball_like(), curved()};
  for (std::size_t s = 0; s < systems.size(); ++s) {
    for (int i = 0; i < 3; ++i) {
      auto p = s == 1 ? ball_point(rng) : random_point(rng, systems[s].dim());
      auto m = verify_constrained(systems[s], p, rng);
      for (const auto& [name, r] : m) EXPECT_LE(r, 1e-8) << name << " system " << s;
    }
  }
}

TEST(ConstrainedProperties, AsymmetricUpsilonGivesTorsion) {
  auto f = build_constrained_frame(curved(), std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  auto nabla = constrained_glued(f);
  VectorGerm t = torsion(nabla, f.D[0], f.D[1]);
  // Upsilon^z_zw - Upsilon^z_wz = w - 0.5, Upsilon^w_zw - Upsilon^w_wz = 0 - 1.
  EXPECT_NEAR(t[f.c_index(0)].value(), 0.5 - 0.5, 1e-13);
  EXPECT_NEAR(t[f.c_index(1)].value(), -1.0, 1e-13);
}

TEST(ConstrainedShape, KnifeEdgeSpectrum) {
  auto sys = knife_edge();
  const double phi = 0.5, uphi = 1.1, ux = -0.7;
  auto f = build_constrained_frame(sys, knife_point(phi, uphi, ux));
  auto shape = constrained_shape(f);
  EXPECT_LE(shape.leading_coefficient_error, 1e-10);
  const double phi22 = f.Phi[1][1].value();
  const double mu = std::sqrt(-phi22);
  ASSERT_EQ(shape.eigenspaces.size(), 3u);
  EXPECT_NEAR(shape.eigenspaces[0].mu, -mu, 1e-9);
  EXPECT_NEAR(shape.eigenspaces[1].mu, 0.0, 1e-12);
  EXPECT_NEAR(shape.eigenspaces[2].mu, mu, 1e-9);
  EXPECT_EQ(shape.eigenspaces[1].frame_vectors.cols(), 3);
  EXPECT_EQ(shape.eigenspaces[0].frame_vectors.cols(), 1);

  // Kernel contains Gamma~, d/dy and u_phi H1 + u_x H2 (frame order Gamma, Dy, V1, V2, H1, H2).
  Eigen::MatrixXd ker = shape.eigenspaces[1].frame_vectors;
  auto in_span = [&](const Eigen::VectorXd& v, const Eigen::MatrixXd& basis) {
    return (v - basis * (basis.transpose() * v)).norm() / v.norm();
  };
  Eigen::VectorXd g = Eigen::VectorXd::Zero(6), dy = g, h = g;
  g(0) = 1;
  dy(1) = 1;
  h(4) = uphi;
  h(5) = ux;
  EXPECT_LE(in_span(g, ker), 1e-9);
  EXPECT_LE(in_span(dy, ker), 1e-9);
  EXPECT_LE(in_span(h, ker), 1e-9);

  for (int s : {0, 2}) {
    double m = shape.eigenspaces[static_cast<std::size_t>(s)].mu;
    Eigen::VectorXd want = Eigen::VectorXd::Zero(6);
    want(1) = -f.K[0][1].value();
    want(5) = m;
    want(3) = m * m;
    EXPECT_LE(in_span(want, shape.eigenspaces[static_cast<std::size_t>(s)].frame_vectors), 1e-7);
    EXPECT_LE(shape.eigenspaces[static_cast<std::size_t>(s)].equation_residual, 1e-9);
  }
  ASSERT_EQ(shape.real_roots.size(), 6u);
  EXPECT_EQ(shape.zero_root_multiplicity, 4);
}

TEST(ConstrainedShape, SingleDofFactorization) {
  // m = 1 with K dF/dx^alpha = 0: det = mu^3 + mu Phi~.
  auto sys = ConstrainedSystem::from_expressions({"x"}, {"y"}, {"-2*u_x + x"}, {"u_x*x"});
  auto f = build_constrained_frame(sys, std::vector<double>{0.0, 0.3, 0.1, 0.4});
  auto shape = constrained_shape(f);
  double phi = f.Phi[0][0].value();
  ASSERT_EQ(shape.polynomial.size(), 4u);
  EXPECT_NEAR(shape.polynomial[0], 0.0, 1e-12);
  EXPECT_NEAR(shape.polynomial[1], phi, 1e-10);
  EXPECT_NEAR(shape.polynomial[2], 0.0, 1e-10);
  EXPECT_NEAR(shape.polynomial[3], 1.0, 1e-10);
  std::vector<double> want{0.0};
  if (phi < 0) want = {-std::sqrt(-phi), 0.0, std::sqrt(-phi)};
  ASSERT_EQ(shape.real_roots.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(shape.real_roots[i], want[i], 1e-9);
}

TEST(ConstrainedShape, ComplexRootsGiveOnlyZero) {
  // Phi~ > 0: mu^2 = -Phi~ has no real solution.
  auto sys = ConstrainedSystem::from_expressions({"x"}, {"y"}, {"-4*x"}, {"u_x"});
  auto f = build_constrained_frame(sys, std::vector<double>{0.0, 0.3, 0.1, 0.4});
  auto shape = constrained_shape(f);
  EXPECT_NEAR(f.Phi[0][0].value(), 4.0, 1e-14);
  for (double r : shape.real_roots) EXPECT_EQ(r, 0.0);
}

TEST(ConstrainedShape, Decoupling) {
  auto f = build_constrained_frame(knife_edge(), knife_point(0.3, 0.5, 0.8));
  auto shape = constrained_shape(f);
  ASSERT_EQ(shape.decoupling.size(), 1u);
  EXPECT_TRUE(shape.decoupling[0].shape_vanishes);
  EXPECT_TRUE(shape.decoupling[0].coefficients_vanish);
  EXPECT_LE(shape.decoupling[0].shape_of_horizontal, 1e-12);

  auto g = build_constrained_frame(curved(), std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  auto s2 = constrained_shape(g);
  for (const auto& d : s2.decoupling) {
    EXPECT_FALSE(d.shape_vanishes);
    EXPECT_FALSE(d.coefficients_vanish);
  }
}

TEST(Chetaev, KnifeEdgeAndAffineFlag) {
  auto f = build_constrained_frame(knife_edge(), knife_point(0.6, 0.5, 0.8));
  auto c = chetaev_connection(f);
  EXPECT_NEAR(c.sigma[0].value(), 0.0, 1e-14);
  EXPECT_NEAR(c.sigma_b[0][1].value(), std::tan(0.6), 1e-14);
  EXPECT_NEAR(c.sigma_b[0][0].value(), 0.0, 1e-14);
  EXPECT_TRUE(c.affine);

  auto constant = build_constrained_frame(ConstrainedSystem::from_expressions({"x"}, {"y"}, {"0"}, {"1.5"}),
                                          std::vector<double>{0.0, 0.1, 0.2, 0.3});
  auto cc = chetaev_connection(constant);
  EXPECT_EQ(cc.sigma[0].value(), 1.5);
  EXPECT_EQ(cc.sigma_b[0][0].value(), 0.0);
  EXPECT_TRUE(cc.affine);

  auto nonlinear = build_constrained_frame(curved(), std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
  EXPECT_FALSE(chetaev_connection(nonlinear).affine);
}

TEST(ConstrainedProperties, PerturbationIsDetected) {
  std::mt19937_64 rng(206);
  auto p = knife_point(0.3, 0.5, 0.8);
  for (double eps : {1e-3, 1e-5}) {
    auto m = verify_constrained(knife_edge(), p, rng, 3, eps);
    double worst = 0.0;
    for (const auto& [name, r] : m) worst = std::max(worst, r);
    EXPECT_GT(worst, eps / 10);
    EXPECT_LT(worst, eps * 10);
    EXPECT_GT(m.at("thm.nabla_S"), eps / 10);
  }
}
