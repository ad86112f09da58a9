#include <gtest/gtest.h>

#include <random>

#include "sodegeo/glue.hpp"
#include "toy_decomposition.hpp"

using namespace sodegeo;

namespace {

// Flat coordinate connection: nabla_X Y = X(Y^i) d_i.
VectorGerm flat(const VectorGerm& x, const VectorGerm& y) {
  VectorGerm r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = directional(x, y[i]);
  return r;
}

}  // namespace

TEST(LieBracket, CoordinateFields) {
  std::vector<double> p{0.3, -0.2, 0.7};
  auto z = coordinate_jets(p, 2);
  VectorGerm x = coordinate_vector(3, 0);
  VectorGerm y = zero_vector(3);
  y[1] = z[0];
  VectorGerm b = lie_bracket(x, y);
  EXPECT_EQ(b[0].value(), 0.0);
  EXPECT_EQ(b[1].value(), 1.0);
  EXPECT_EQ(b[2].value(), 0.0);
  VectorGerm self = lie_bracket(y, y);
  EXPECT_EQ(max_abs(self), 0.0);
}

TEST(LieBracket, FromVectorFieldFn) {
  VectorFieldFn x = [](std::span<const Jet> v) { return std::vector<Jet>{v[1], -v[0]}; };
  VectorFieldFn y = [](std::span<const Jet> v) { return std::vector<Jet>{v[0] * v[0], Jet(1.0)}; };
  std::vector<double> p{0.4, 1.5};
  VectorGerm b = lie_bracket(germ_at(x, p, 2), germ_at(y, p, 2));
  // [X,Y]^0 = X(x^2) - Y(y) = 2 x y - 1; [X,Y]^1 = X(1) - Y(-x) = x^2.
  EXPECT_NEAR(b[0].value(), 2 * 0.4 * 1.5 - 1.0, 1e-15);
  EXPECT_NEAR(b[1].value(), 0.16, 1e-15);
}

TEST(Extend, ReducesInsideImageAndForIdentity) {
  std::mt19937_64 rng(31);
  auto d = toy::make_decomposition(rng, 4, 2);
  const auto& part = d.parts[0];
  VectorGerm x = d.project(0, toy::random_field(rng, d.z));
  VectorGerm y = d.project(0, toy::random_field(rng, d.z));
  EXPECT_LE(relative_residual(extend_derivative(part.projector, part.derivative, x, y), part.derivative(x, y)), 1e-12);

  Endomorphism id = Endomorphism::identity(4);
  VectorGerm xa = toy::random_field(rng, d.z), ya = toy::random_field(rng, d.z);
  EXPECT_LE(relative_residual(extend_derivative(id, flat, xa, ya), flat(xa, ya)), 1e-14);
}

TEST(Extend, RejectsFieldOutsideImage) {
  std::mt19937_64 rng(32);
  auto d = toy::make_decomposition(rng, 3, 2);
  VectorGerm y = d.frame[static_cast<std::size_t>(d.blocks[1][0])];
  EXPECT_THROW(extend_derivative(d.parts[0].projector, d.parts[0].derivative, y, y), DecompositionError);
}

TEST(Extend, LinearOverFunctionsInX) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = toy::make_decomposition(rng, 3 + trial % 4, 2 + trial % 2);
    for (std::size_t a = 0; a < d.parts.size(); ++a) {
      const auto& part = d.parts[a];
      Jet f = toy::random_function(rng, d.z);
      VectorGerm x = toy::random_field(rng, d.z);
      VectorGerm y = d.project(a, toy::random_field(rng, d.z));
      VectorGerm lhs = extend_derivative(part.projector, part.derivative, f * x, y);
      VectorGerm rhs = f * extend_derivative(part.projector, part.derivative, x, y);
      EXPECT_LE(relative_residual(lhs, rhs), 1e-8);
    }
  }
}

TEST(Glue, RejectsNonDecomposition) {
  std::mt19937_64 rng(34);
  auto d = toy::make_decomposition(rng, 3, 2);
  auto parts = d.parts;
  parts.pop_back();
  EXPECT_THROW(GluedConnection{parts}, DecompositionError);
}

TEST(Glue, FlatConstantProjectorsGiveZero) {
  // Coordinate projectors with flat derivatives: constant Y has zero derivative.
  const std::size_t dim = 3;
  std::vector<GluePart> parts;
  for (std::size_t i = 0; i < dim; ++i) {
    Endomorphism p(dim);
    p.add(coordinate_vector(dim, i), coordinate_covector(dim, i));
    parts.push_back({p, flat, "axis"});
  }
  std::mt19937_64 rng(35);
  auto z = coordinate_jets(std::vector<double>{0.1, 0.2, 0.3}, 2);
  VectorGerm x = toy::random_field(rng, z);
  VectorGerm y{Jet(1.5), Jet(-2.0), Jet(0.25)};
  EXPECT_EQ(max_abs(glue_derivative(parts, x, y)), 0.0);
}

TEST(Torsion, FlatConnectionIsSymmetric) {
  std::mt19937_64 rng(36);
  auto z = coordinate_jets(std::vector<double>{0.1, -0.4, 0.9}, 3);
  VectorGerm x = toy::random_field(rng, z), y = toy::random_field(rng, z), w = toy::random_field(rng, z);
  EXPECT_LE(max_abs(torsion(flat, x, y)), 1e-14);
  EXPECT_LE(max_abs(curvature(flat, x, y, w)), 1e-13);
  VectorGerm e0 = coordinate_vector(3, 0);
  EXPECT_EQ(max_abs(shape_map(flat, e0, e0)), 0.0);
}

TEST(Torsion, CrossSubmoduleCase) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = toy::make_decomposition(rng, 4 + trial % 3, 3);
    GluedConnection nabla(d.parts);
    auto conn = nabla.as_connection();
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t c = 0; c < 3; ++c) {
        if (b == c) continue;
        VectorGerm x = d.project(b, toy::random_field(rng, d.z));
        VectorGerm y = d.project(c, toy::random_field(rng, d.z));
        VectorGerm bracket = lie_bracket(x, y);
        EXPECT_LE(relative_residual(conn(x, y), d.project(c, bracket)), 1e-8);
        VectorGerm want = zero_vector(x.size());
        for (std::size_t e = 0; e < 3; ++e) {
          if (e != b && e != c) want -= d.project(e, bracket);
        }
        EXPECT_LE(relative_residual(torsion(conn, x, y), want), 1e-8);
        VectorGerm shape_want = zero_vector(x.size());
        for (std::size_t e = 0; e < 3; ++e) {
          if (e != c) shape_want -= d.project(e, bracket);
        }
        EXPECT_LE(relative_residual(shape_map(conn, x, y), shape_want), 1e-8);
      }
    }
  }
}

TEST(ShapeMap, RepresentationsAgree) {
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = toy::make_decomposition(rng, 3 + trial % 4, 2 + trial % 2);
    auto conn = GluedConnection(d.parts).as_connection();
    VectorGerm x = toy::random_field(rng, d.z), y = toy::random_field(rng, d.z);
    VectorGerm a = shape_map(conn, x, y, ShapeMode::kBracket);
    VectorGerm b = shape_map(conn, x, y, ShapeMode::kTorsion);
    EXPECT_LE(relative_residual(a, b), 1e-8);
  }
}

TEST(GlueProperty, CovariantDerivativeAxioms) {
  std::mt19937_64 rng(39);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = toy::make_decomposition(rng, 3 + trial % 4, 2 + trial % 2, -1, trial % 2 == 0);
    auto conn = GluedConnection(d.parts).as_connection();
    for (int k = 0; k < 5; ++k) {
      Jet f = toy::random_function(rng, d.z);
      VectorGerm x = toy::random_field(rng, d.z), y = toy::random_field(rng, d.z);
      VectorGerm xy = conn(x, y);
      EXPECT_LE(relative_residual(conn(f * x, y), f * xy), 1e-8);
      EXPECT_LE(relative_residual(conn(x, f * y), directional(x, f) * y + f * xy), 1e-8);
      VectorGerm x2 = toy::random_field(rng, d.z), y2 = toy::random_field(rng, d.z);
      EXPECT_LE(relative_residual(conn(x + x2, y), xy + conn(x2, y)), 1e-10);
      EXPECT_LE(relative_residual(conn(x, y + y2), xy + conn(x, y2)), 1e-10);
      EXPECT_LE(relative_residual(conn(Jet(2.5) * x, y), Jet(2.5) * xy), 1e-10);
      EXPECT_LE(relative_residual(conn(x, Jet(-1.5) * y), Jet(-1.5) * xy), 1e-10);
    }
  }
}

TEST(GlueProperty, SameSubmoduleCase) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = toy::make_decomposition(rng, 3 + trial % 4, 2 + trial % 2);
    auto conn = GluedConnection(d.parts).as_connection();
    for (std::size_t b = 0; b < d.parts.size(); ++b) {
      VectorGerm x = d.project(b, toy::random_field(rng, d.z));
      VectorGerm y = d.project(b, toy::random_field(rng, d.z));
      EXPECT_LE(relative_residual(conn(x, y), d.parts[b].derivative(x, y)), 1e-10);
    }
  }
}

TEST(GlueProperty, ProjectorsParallelIffImagesPreserved) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const int nblocks = 2 + trial % 2;
    auto good = toy::make_decomposition(rng, 3 + trial % 4, nblocks);
    auto conn = GluedConnection(good.parts).as_connection();
    for (std::size_t b = 0; b < good.parts.size(); ++b) {
      for (int k = 0; k < 3; ++k) {
        VectorGerm x = toy::random_field(rng, good.z), y = toy::random_field(rng, good.z);
        VectorGerm r = covariant_derivative(conn, good.parts[b].projector, x, y);
        EXPECT_LE(max_abs(r) / scale_of({&x, &y}), 1e-8);
      }
    }

    auto bad = toy::make_decomposition(rng, 3 + trial % 4, nblocks, 0);
    auto bconn = GluedConnection(bad.parts).as_connection();
    double worst = 0.0;
    for (std::size_t b = 0; b < bad.parts.size(); ++b) {
      VectorGerm x = toy::random_field(rng, bad.z), y = toy::random_field(rng, bad.z);
      VectorGerm r = covariant_derivative(bconn, bad.parts[b].projector, x, y);
      worst = std::max(worst, max_abs(r) / scale_of({&x, &y}));
    }
    EXPECT_GT(worst, 1e-4);
  }
}
