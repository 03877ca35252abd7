#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sklab/geometry.hpp"

using namespace sklab;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

PolyhedralDomain half_line() { return PolyhedralDomain(1, {make_face(vec({1}), 0.0, vec({1}))}); }

PolyhedralDomain orthant(int j) { return oracle::orthant_with_matrix(Matrix::Identity(j, j)); }

PolyhedralDomain skew_orthant(double c) {
  Matrix r(2, 2);
  r << 1, -c, -c, 1;
  return oracle::orthant_with_matrix(r);
}

}  // namespace

TEST(Domain, RejectsBadFaces) {
  EXPECT_THROW(PolyhedralDomain(1, {Face{vec({1}), 0.0, vec({-1})}}), InvalidDomain);
  EXPECT_THROW(PolyhedralDomain(1, {Face{vec({2}), 0.0, vec({1})}}), InvalidDomain);
  EXPECT_THROW(PolyhedralDomain(1, {}), InvalidDomain);
  // Empty interior: x >= 1 and -x >= 0.
  EXPECT_THROW(PolyhedralDomain(1, {make_face(vec({1}), 1.0, vec({1})), make_face(vec({-1}), 0.0, vec({-1}))}),
               InvalidDomain);
}

TEST(Domain, RejectsRedundantFace) {
  EXPECT_THROW(PolyhedralDomain(1, {make_face(vec({1}), 0.0, vec({1})), make_face(vec({1}), -1.0, vec({1}))}),
               InvalidDomain);
}

TEST(Domain, MakeFaceKeepsHalfSpace) {
  const Face f = make_face(vec({2, 0}), 4.0, vec({3, 4}));
  EXPECT_NEAR(f.normal.norm(), 1.0, 1e-15);
  EXPECT_NEAR(f.offset, 2.0, 1e-15);
  EXPECT_NEAR(f.direction(0), 0.6, 1e-15);
}

TEST(ActiveFaces, Examples) {
  EXPECT_EQ(active_faces(half_line(), vec({0})), FaceSet({0}));
  EXPECT_EQ(active_faces(orthant(2), vec({1, 1})), FaceSet({}));
  EXPECT_EQ(active_faces(orthant(2), vec({0, 0})), FaceSet({0, 1}));
  EXPECT_THROW(active_faces(orthant(2), vec({-1, 0})), PointOutsideDomain);
  // Within the relative band counts as on the face.
  EXPECT_EQ(active_faces(orthant(2), vec({1e-12, 3})), FaceSet({0}));
}

TEST(ActiveFacesProperty, MonotoneUnderFaceIncidence) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  const auto dom = orthant(3);
  for (int trial = 0; trial < 500; ++trial) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x(i) = (gen() % 3 == 0) ? 0.0 : u(gen);
    Vector y = x;
    y(static_cast<Eigen::Index>(gen() % 3)) = 0.0;
    const FaceSet a = active_faces(dom, x), b = active_faces(dom, y);
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST(Cones, DirectionAndNormalCones) {
  const auto dom = orthant(2);
  const auto c = direction_cone(dom, vec({0, 2}));
  ASSERT_EQ(c.size(), 1);
  EXPECT_NEAR((c.generators.col(0) - vec({1, 0})).norm(), 0.0, 1e-15);
  EXPECT_TRUE(direction_cone(dom, vec({1, 1})).trivial());
  const auto sk = oracle::orthant_with_matrix((Matrix(2, 2) << 1, -0.6, -0.6, 1).finished());
  EXPECT_EQ(direction_cone(sk, vec({0, 0})).size(), 2);
  EXPECT_EQ(normal_cone(sk, vec({0, 0})).size(), 2);
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify_boundary_point(half_line(), vec({0})), BoundaryClass::kU);
  EXPECT_EQ(classify_boundary_point(half_line(), vec({1})), BoundaryClass::kInterior);
  EXPECT_EQ(classify_boundary_point(skew_orthant(2.0), vec({0, 0})), BoundaryClass::kV);
  EXPECT_EQ(classify_boundary_point(skew_orthant(0.5), vec({0, 0})), BoundaryClass::kU);
  EXPECT_EQ(classify_boundary_point(skew_orthant(2.0), vec({0, 1})), BoundaryClass::kU);
}

TEST(ClassifyProperty, MatchesSimplexGridOracleForSkewOrthant) {
  for (double c = 0.05; c < 2.0; c += 0.1) {
    if (std::abs(c - 1.0) < 0.02) continue;
    const auto dom = skew_orthant(c);
    Matrix r(2, 2);
    r << 1, -c, -c, 1;
    // U iff some convex combination of normals has positive product with both directions.
    const bool grid_u = oracle::grid_is_s_matrix(r.transpose(), 400);
    EXPECT_EQ(classify_boundary_point(dom, vec({0, 0})) == BoundaryClass::kU, grid_u) << "c = " << c;
  }
}

TEST(ClassifyProperty, ScaleInvariantInDirections) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5), s(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix r = Matrix::Identity(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j) r(i, j) = u(gen);
      }
    }
    Matrix scaled = r;
    for (int j = 0; j < 3; ++j) scaled.col(j) *= s(gen);
    const auto a = oracle::orthant_with_matrix(r), b = oracle::orthant_with_matrix(scaled);
    for (const Vector& x : {vec({0, 0, 0}), vec({0, 0, 1}), vec({0, 1, 0}), vec({1, 0, 0})}) {
      EXPECT_EQ(classify_boundary_point(a, x), classify_boundary_point(b, x));
    }
  }
}

TEST(CompletelyS, Examples) {
  EXPECT_TRUE(is_completely_s(orthant(2)).completely_s);
  const auto bad = is_completely_s(skew_orthant(2.0));
  EXPECT_FALSE(bad.completely_s);
  EXPECT_EQ(bad.witness, FaceSet({0, 1}));
  EXPECT_EQ(format_face_set(bad.witness), "{0,1}");
  Matrix r = Matrix::Identity(3, 3) + 0.1 * (Matrix::Ones(3, 3) - Matrix::Identity(3, 3));
  const auto good = is_completely_s(oracle::orthant_with_matrix(r));
  EXPECT_TRUE(good.completely_s);
  EXPECT_EQ(good.strata.size(), 7u);
}

TEST(CompletelyS, StrataOrderedBySizeThenLexicographically) {
  const auto res = is_completely_s(orthant(3));
  std::vector<FaceSet> got;
  for (const auto& s : res.strata) got.push_back(s.faces);
  const std::vector<FaceSet> want{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
  EXPECT_EQ(got, want);
}

TEST(CompletelyS, SkipsEmptyStrata) {
  // Strip 0 <= x1 <= 1 in R^2: faces 0 and 1 never meet.
  const PolyhedralDomain strip(2, {make_face(vec({1, 0}), 0.0, vec({1, 0})), make_face(vec({-1, 0}), -1.0, vec({-1, 0}))});
  const auto res = is_completely_s(strip);
  EXPECT_TRUE(res.completely_s);
  EXPECT_EQ(res.strata.size(), 2u);
}

TEST(CompletelyS, RejectsTooManyFaces) {
  std::vector<Face> faces;
  for (int k = 0; k < 17; ++k) {
    const double a = 2.0 * M_PI * k / 17.0;
    faces.push_back(make_face(vec({std::cos(a), std::sin(a)}), -1.0, vec({std::cos(a), std::sin(a)})));
  }
  const PolyhedralDomain poly(2, faces);
  EXPECT_THROW(is_completely_s(poly), InvalidArgument);
}

TEST(CompletelySProperty, AgreesWithPrincipalSubmatrixGridSearch) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  int disagreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int j = 1 + trial % 4;
    Matrix r = Matrix::Identity(j, j);
    for (int a = 0; a < j; ++a) {
      for (int b = 0; b < j; ++b) {
        if (a != b) r(a, b) = std::round(u(gen) * 4.0) / 4.0 + 0.05;
      }
    }
    const bool lib = is_completely_s(oracle::orthant_with_matrix(r)).completely_s;
    const bool ref = oracle::grid_is_completely_s(r, j <= 3 ? 600 : 80);
    if (lib != ref) ++disagreements;
    EXPECT_EQ(lib, ref) << "trial " << trial << "\n" << r;
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(ConeProjection, Examples) {
  ConeDescription e1{vec({1, 0})};
  EXPECT_NEAR((project_to_cone(e1, vec({2, 3})) - vec({2, 0})).norm(), 0.0, 1e-12);
  ConeDescription both{Matrix::Identity(2, 2)};
  EXPECT_NEAR(project_to_cone(both, vec({-1, -1})).norm(), 0.0, 1e-12);
  ConeDescription skew{(Matrix(2, 2) << 1, 1, 0, 1).finished()};
  EXPECT_NEAR((project_to_cone(skew, vec({0, 1})) - vec({0.5, 0.5})).norm(), 0.0, 1e-12);
  EXPECT_TRUE(project_to_cone(ConeDescription{Matrix(2, 0)}, vec({1, 1})).isZero());
}

TEST(ConeProjectionProperty, KktOfMetricProjection) {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 300; ++trial) {
    const int j = 2 + trial % 3, k = 1 + trial % 4;
    Matrix g(j, k);
    for (int a = 0; a < j; ++a) {
      for (int b = 0; b < k; ++b) g(a, b) = nd(gen);
    }
    Vector y(j);
    for (int a = 0; a < j; ++a) y(a) = nd(gen);
    const ConeDescription cone{g};
    const Vector p = project_to_cone(cone, y);
    for (int b = 0; b < k; ++b) EXPECT_LE((y - p).dot(g.col(b)), 1e-9);
    EXPECT_NEAR((y - p).dot(p), 0.0, 1e-9);
    EXPECT_TRUE(cone_membership(cone, p, 1e-9));
  }
}

TEST(ConeMembership, Examples) {
  ConeDescription e1{vec({1, 0})};
  EXPECT_TRUE(cone_membership(e1, vec({1, 0}), 1e-9));
  EXPECT_FALSE(cone_membership(e1, vec({0, 1}), 1e-9));
  ConeDescription skew{(Matrix(2, 2) << 1, 1, 0, 1).finished()};
  EXPECT_TRUE(cone_membership(skew, vec({2, 1}), 1e-9));
}
