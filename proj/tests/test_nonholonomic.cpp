#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rolling_ball.hpp"
#include "sodegeo/nonholonomic.hpp"

using namespace sodegeo;

namespace {

NonholonomicProblem knife_edge() {
  return NonholonomicProblem::from_expressions({"phi", "x"}, {"y"}, "(u_x^2 + u_y^2 + u_phi^2)/2", {"tan(phi)*u_x"});
}

ConstrainedSystem knife_edge_closed_form() {
  return ConstrainedSystem::from_expressions({"phi", "x"}, {"y"}, {"0", "-u_phi*u_x*tan(phi)"}, {"tan(phi)*u_x"});
}

std::vector<double> knife_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phi(-1.3, 1.3), any(-2.0, 2.0);
  return {any(rng), phi(rng), any(rng), any(rng), any(rng), any(rng)};
}

}  // namespace

TEST(Hessian, QuadraticKineticEnergyIsIdentity) {
  auto prob = knife_edge();
  std::vector<double> full{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  EXPECT_LE((hessian_W(prob, full) - Eigen::MatrixXd::Identity(3, 3)).norm(), 0.0);
}

TEST(Hessian, RollingBallCoupling) {
  auto prob = rolling_ball::problem();
  const double I = rolling_ball::kParams.at("I"), m = rolling_ball::kParams.at("m"), R = rolling_ball::kParams.at("R");
  // (t, varphi, psi, theta, alpha, beta, u_varphi, u_psi, u_theta, u_alpha, u_beta)
  std::vector<double> full{0.0, 0.3, 1.1, 0.8, 1.2, 0.4, 0.2, -0.5, 0.9, 0.1, -0.3};
  auto w = hessian_W(prob, full);
  EXPECT_NEAR(w(1, 0), I * std::cos(0.8), 1e-14);
  EXPECT_NEAR(w(0, 1), I * std::cos(0.8), 1e-14);
  EXPECT_NEAR(w(0, 0), I, 1e-14);
  EXPECT_NEAR(w(3, 3), m * R, 1e-14);
  EXPECT_NEAR(w(4, 4), m * R * std::sin(1.2) * std::sin(1.2), 1e-14);
  EXPECT_EQ(w(3, 0), 0.0);
}

TEST(Mass, KnifeEdge) {
  std::mt19937_64 rng(301);
  auto prob = knife_edge();
  for (int i = 0; i < 10; ++i) {
    auto z = knife_point(rng);
    auto c = constrained_mass_C(prob, z);
    const double sec2 = 1.0 / (std::cos(z[1]) * std::cos(z[1]));
    EXPECT_NEAR(c(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(c(1, 1), sec2, 1e-12 * sec2);
    EXPECT_NEAR(c(0, 1), 0.0, 1e-14);
  }
}

TEST(Mass, VelocityFreeConstraintKeepsW) {
  auto prob = NonholonomicProblem::from_expressions({"x", "y"}, {"z"}, "u_x^2 + u_x*u_y + 2*u_y^2 + 3*u_z^2", {"x*y"});
  auto c = constrained_mass_C(prob, std::vector<double>{0.0, 0.3, 0.4, 0.5, 0.6, 0.7});
  Eigen::Matrix2d w;
  w << 2.0, 1.0, 1.0, 4.0;
  EXPECT_LE((c - w).norm(), 1e-14);
}

TEST(Mass, InheritsPositiveDefiniteness) {
  std::mt19937_64 rng(302);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 3, m = 1 + trial % (n - 1);
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) b(i, j) = g(rng);
    }
    Eigen::MatrixXd w = b * b.transpose() + 0.05 * Eigen::MatrixXd::Identity(n, n);
    std::vector<std::string> names, free, constrained;
    for (int i = 0; i < n; ++i) names.push_back("q" + std::to_string(i));
    free.assign(names.begin(), names.begin() + m);
    constrained.assign(names.begin() + m, names.end());
    std::ostringstream L;
    L.precision(17);
    L << "0";
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) L << " + " << 0.5 * w(i, j) << "*u_" << names[static_cast<std::size_t>(i)] << "*u_" << names[static_cast<std::size_t>(j)];
    }
    std::vector<std::string> psi;
    for (int al = m; al < n; ++al) {
      std::ostringstream e;
      e.precision(17);
      e << "sin(" << names[0] << ")";
      for (int a = 0; a < m; ++a) e << " + " << g(rng) << "*u_" << names[static_cast<std::size_t>(a)];
      psi.push_back(e.str());
    }
    auto prob = NonholonomicProblem::from_expressions(free, constrained, L.str(), psi);
    std::vector<double> z(static_cast<std::size_t>(prob.dim()));
    for (auto& v : z) v = g(rng);
    std::vector<double> full(static_cast<std::size_t>(prob.full_dim()), 0.3);
    ASSERT_TRUE(is_positive_definite(hessian_W(prob, full)));
    auto c = constrained_mass_C(prob, z);
    EXPECT_LE((c - c.transpose()).norm(), 0.0);
    EXPECT_TRUE(is_positive_definite(c));
  }
}

TEST(Reduce, KnifeEdge) {
  std::mt19937_64 rng(303);
  auto prob = knife_edge();
  for (int i = 0; i < 50; ++i) {
    auto z = knife_point(rng);
    auto r = reduce(prob, z);
    const double phi = z[1], uphi = z[4], ux = z[5];
    const double fx = -ux * uphi * std::tan(phi);
    EXPECT_NEAR(r.F[0], 0.0, 1e-10);
    EXPECT_NEAR(r.F[1], fx, 1e-10 * (1 + std::abs(fx)));
    // lambda = y'' = d/dt(tan(phi) x').
    const double sec2 = 1.0 / (std::cos(phi) * std::cos(phi));
    const double ydd = sec2 * uphi * ux + std::tan(phi) * fx;
    EXPECT_NEAR(r.lambda[0], ydd, 1e-10 * (1 + std::abs(ydd)));
    EXPECT_LE(r.linear_part_residual, 1e-8);
    EXPECT_LE(r.equation_residual, 1e-12);
    EXPECT_TRUE(r.hessian_positive_definite);
    EXPECT_TRUE(r.mass_positive_definite);
  }
}

TEST(Reduce, FreeParticleWithoutConstraints) {
  auto prob = NonholonomicProblem::from_expressions({"x", "y"}, {}, "(u_x^2 + u_y^2)/2", {});
  auto r = reduce(prob, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  EXPECT_EQ(r.F[0], 0.0);
  EXPECT_EQ(r.F[1], 0.0);
  EXPECT_TRUE(r.lambda.empty());
}

TEST(Reduce, HarmonicOscillator) {
  auto prob = NonholonomicProblem::from_expressions({"x"}, {}, "u_x^2/2 - x^2/2", {});
  for (double x : {-1.0, 0.0, 0.3, 2.5}) {
    auto r = reduce(prob, std::vector<double>{0.0, x, 0.7});
    EXPECT_NEAR(r.F[0], -x, 1e-15);
  }
}

TEST(Reduce, TimeDependentLagrangian) {
  // L = e^t u^2 / 2 gives x'' = -x'.
  auto prob = NonholonomicProblem::from_expressions({"x"}, {}, "exp(t)*u_x^2/2", {});
  auto r = reduce(prob, std::vector<double>{0.4, 1.0, 0.7});
  EXPECT_NEAR(r.F[0], -0.7, 1e-14);
}

TEST(Reduce, SingularMassIsReported) {
  auto prob = NonholonomicProblem::from_expressions({"x"}, {"y"}, "(u_x^2 - u_y^2)/2", {"u_x"});
  EXPECT_FALSE(is_positive_definite(hessian_W(prob, std::vector<double>{0, 0, 0, 1, 1})));
  try {
    reduce(prob, std::vector<double>{0.0, 0.1, 0.2, 0.3});
    FAIL() << "expected a singular-matrix error";
  } catch (const SingularMatrixError& e) {
    EXPECT_GT(e.condition(), 1e12);
    EXPECT_NE(std::string(e.what()).find("condition"), std::string::npos);
  }
}

TEST(Reduce, DomainErrorPropagates) {
  auto prob = knife_edge();
  EXPECT_THROW(reduce(prob, std::vector<double>{0.0, M_PI / 2, 0.0, 0.0, 1.0, 1.0}), DomainError);
}

TEST(Reduce, RollingBallSatisfiesEquationsOfMotion) {
  std::mt19937_64 rng(304);
  auto prob = rolling_ball::problem();
  for (int i = 0; i < 50; ++i) {
    auto z = rolling_ball::sample(rng);
    auto r = reduce(prob, z);
    auto res = rolling_ball::residuals(z, r.F, r.lambda, r.constrained_velocity);
    for (std::size_t e = 0; e < res.size(); ++e) EXPECT_LE(res[e], 1e-10) << "equation " << e + 1;
    EXPECT_LE(r.linear_part_residual, 1e-8);
    EXPECT_TRUE(r.mass_positive_definite);
  }
}

TEST(Reduce, OracleDetectsWrongMultiplier) {
  std::mt19937_64 rng(305);
  auto prob = rolling_ball::problem();
  auto z = rolling_ball::sample(rng);
  auto r = reduce(prob, z);
  auto lambda = r.lambda;
  lambda[1] += 1e-3;
  auto res = rolling_ball::residuals(z, r.F, lambda, r.constrained_velocity);
  EXPECT_GT(*std::max_element(res.begin(), res.end()), 1e-5);
}

TEST(Pipeline, JetsMatchClosedForm) {
  std::mt19937_64 rng(306);
  auto reduced = as_constrained_system(knife_edge());
  auto closed = knife_edge_closed_form();
  for (int i = 0; i < 10; ++i) {
    auto p = knife_point(rng);
    auto a = build_constrained_frame(reduced, p);
    auto b = build_constrained_frame(closed, p);
    for (int c = 0; c < 2; ++c) {
      ASSERT_EQ(a.F[static_cast<std::size_t>(c)].size(), b.F[static_cast<std::size_t>(c)].size());
      for (std::size_t j = 0; j < a.F[static_cast<std::size_t>(c)].size(); ++j) {
        EXPECT_NEAR(a.F[static_cast<std::size_t>(c)].coeff(j), b.F[static_cast<std::size_t>(c)].coeff(j), 1e-10);
      }
    }
  }
}

TEST(Pipeline, KnifeEdgePhi) {
  std::mt19937_64 rng(307);
  auto reduced = as_constrained_system(knife_edge());
  for (int i = 0; i < 10; ++i) {
    auto p = knife_point(rng);
    auto f = build_constrained_frame(reduced, p);
    const double phi = p[1], uphi = p[4];
    const double sec2 = 1.0 / (std::cos(phi) * std::cos(phi));
    const double want = 0.125 * uphi * uphi * (std::cos(2 * phi) - 5) * sec2;
    EXPECT_NEAR(f.Phi[1][1].value(), want, 1e-8 * (1 + std::abs(want)));
  }
}

TEST(Pipeline, RollingBallFrameIdentities) {
  std::mt19937_64 rng(308);
  auto reduced = as_constrained_system(rolling_ball::problem());
  auto z = rolling_ball::sample(rng);
  auto m = verify_constrained(reduced, z, rng, 1);
  for (const auto& [name, r] : m) EXPECT_LE(r, 1e-8) << name;
}
