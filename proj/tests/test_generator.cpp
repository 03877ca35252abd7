#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sklab/generator.hpp"

using namespace sklab;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

PolyhedralDomain half_line() { return PolyhedralDomain(1, {make_face(vec({1}), 0.0, vec({1}))}); }

TestFunction square_fn() {
  TestFunction f;
  f.value = [](const Vector& x) { return x.squaredNorm(); };
  f.gradient = [](const Vector& x) { return Vector(2.0 * x); };
  f.hessian = [](const Vector& x) { return Matrix(2.0 * Matrix::Identity(x.size(), x.size())); };
  return f;
}

TestFunction exp_fn(const Vector& theta) {
  TestFunction f;
  f.value = [theta](const Vector& x) { return std::exp(theta.dot(x)); };
  f.gradient = [theta](const Vector& x) { return Vector(std::exp(theta.dot(x)) * theta); };
  f.hessian = [theta](const Vector& x) { return Matrix(std::exp(theta.dot(x)) * theta * theta.transpose()); };
  return f;
}

Vector fd_gradient(const TestFunction& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f.value(a) - f.value(b)) / (2 * h);
  }
  return g;
}

Matrix fd_hessian(const TestFunction& f, const Vector& x, double h = 1e-6) {
  Matrix m(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    m.col(i) = (f.gradient(a) - f.gradient(b)) / (2 * h);
  }
  return m;
}

}  // namespace

TEST(Generator, Examples) {
  const auto bm = constant_coefficients(vec({0}), Matrix::Identity(1, 1));
  for (double x : {0.0, 0.3, 2.0}) EXPECT_NEAR(apply_generator(bm, square_fn(), vec({x})), 1.0, 1e-15);

  const Vector b = vec({0.4, -1.2});
  Matrix sigma(2, 2);
  sigma << 1.0, 0.3, -0.2, 0.7;
  const auto c = constant_coefficients(b, sigma);
  const auto lin = make_unchecked_linear_test_fn(vec({2, -1}));
  EXPECT_NEAR(apply_generator(c, lin, vec({5, 7})), vec({2, -1}).dot(b), 1e-15);

  const Vector theta = vec({0.5, -0.25});
  const Matrix a = sigma * sigma.transpose();
  const Vector x = vec({0.3, 1.1});
  const double expect = (theta.dot(b) + 0.5 * theta.dot(a * theta)) * std::exp(theta.dot(x));
  EXPECT_NEAR(apply_generator(c, exp_fn(theta), x), expect, 1e-14);
}

TEST(Coefficients, Factories) {
  Matrix bmat(2, 2);
  bmat << 1, 0.5, 0, 2;
  const auto ou = ou_coefficients(bmat, Matrix::Identity(2, 2));
  EXPECT_EQ(ou.drift_at(vec({1, 1})), vec({-1.5, -2}));
  const auto sd = state_diag_coefficients(vec({0, 0}), vec({1, 2}), vec({0.5, 0}));
  EXPECT_EQ(sd.dispersion_at(vec({2, 3})).diagonal(), vec({2, 2}));
  EXPECT_EQ(sd.diffusion_at(vec({2, 3}))(0, 1), 0.0);
  EXPECT_THROW(constant_coefficients(vec({0, 0}), Matrix::Identity(3, 3)), InvalidArgument);
}

TEST(Coefficients, EllipticitySpotCheck) {
  Matrix sigma(2, 2);
  sigma << 1, 0, 0, 0.5;
  const auto c = constant_coefficients(vec({0, 0}), sigma);
  const double floor = ellipticity_spot_check(c, -1, 1);
  EXPECT_GE(floor, 0.25 - 1e-12);
  EXPECT_LT(floor, 0.3);
}

TEST(LinearTestFn, Examples) {
  const auto f = make_linear_test_fn(half_line(), vec({1}));
  EXPECT_EQ(half_line().face(0).direction.dot(f.gradient(vec({0}))), 1.0);
  EXPECT_NO_THROW(make_linear_test_fn(oracle::orthant_with_matrix(Matrix::Identity(2, 2)), vec({1, 1})));
  Matrix r(2, 2);
  r << 1, -2, -2, 1;
  EXPECT_THROW(make_linear_test_fn(oracle::orthant_with_matrix(r), vec({0, 1})), ObliqueSignViolation);
}

TEST(BumpTestFn, HalfLine) {
  const auto f = make_bump_test_fn(half_line(), vec({0}), 1.0, +1);
  EXPECT_DOUBLE_EQ(f.value(vec({0})), 1.0);
  EXPECT_EQ(f.gradient(vec({0}))(0), 0.0);
  for (double x = 1.0; x < 3.0; x += 0.1) EXPECT_EQ(f.value(vec({x})), 0.0);
  double prev = 1.0;
  for (double x = 0.0; x <= 1.0; x += 0.01) {
    const double v = f.value(vec({x}));
    EXPECT_LE(v, prev + 1e-15);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  ASSERT_GT(f.plateau_radius, 0.0);
  EXPECT_DOUBLE_EQ(f.value(vec({0.999 * f.plateau_radius})), 1.0);
  EXPECT_LT(f.value(vec({1.01 * f.plateau_radius})), 1.0);
}

TEST(BumpTestFn, OrthantCornerIsAdmissible) {
  Matrix r(2, 2);
  r << 1, -0.6, -0.6, 1;
  for (const Matrix& m : {Matrix(Matrix::Identity(2, 2)), r}) {
    const auto dom = oracle::orthant_with_matrix(m);
    const auto f = make_bump_test_fn(dom, vec({0, 0}), 0.5, -1);
    const auto rep = check_admissible(dom, f, false, 1000);
    EXPECT_TRUE(rep.admissible) << "worst " << rep.worst;
    // Direct check on 1000 boundary points per face.
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 0.6);
    for (int k = 0; k < 1000; ++k) {
      const double s = u(gen);
      EXPECT_GE(dom.face(0).direction.dot(f.gradient(vec({0, s}))), -1e-12);
      EXPECT_GE(dom.face(1).direction.dot(f.gradient(vec({s, 0}))), -1e-12);
    }
    EXPECT_DOUBLE_EQ(f.value(vec({0, 0})), -1.0);
  }
}

TEST(BumpTestFn, Rejections) {
  Matrix bad(2, 2);
  bad << 1, -2, -2, 1;
  const auto vdom = oracle::orthant_with_matrix(bad);
  EXPECT_THROW(make_bump_test_fn(vdom, vec({0, 0}), 0.5, -1), CenterInV);
  // Face-0 stratum is U but the corner (V) is within the radius.
  EXPECT_THROW(make_bump_test_fn(vdom, vec({0, 0.3}), 0.5, -1), RadiusTooLarge);
  EXPECT_NO_THROW(make_bump_test_fn(vdom, vec({0, 0.6}), 0.5, -1));
  EXPECT_THROW(make_bump_test_fn(half_line(), vec({1}), 0.5, -1), CenterNotOnBoundary);
  EXPECT_THROW(make_bump_test_fn(half_line(), vec({-1}), 0.5, -1), PointOutsideDomain);
  EXPECT_THROW(make_interior_bump_test_fn(half_line(), vec({1}), 1.0), RadiusTooLarge);
}

TEST(TestFnProperty, FiniteDifferenceConsistency) {
  Matrix r(2, 2);
  r << 1, -0.6, -0.3, 1;
  const auto dom = oracle::orthant_with_matrix(r);
  std::vector<TestFunction> fns{make_bump_test_fn(dom, vec({0, 0}), 0.8, -1),
                                make_bump_test_fn(dom, vec({0, 1}), 0.5, -1),
                                make_bump_test_fn(dom, vec({0.7, 0}), 0.4, 1),
                                make_interior_bump_test_fn(dom, vec({1, 1}), 0.5),
                                make_linear_test_fn(dom, vec({1, 1})),
                                exp_fn(vec({0.3, -0.2}))};
  fns.push_back(sum(scale(fns[0], 2.0), fns[1]));
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> u(0.01, 1.5);
  for (const TestFunction& f : fns) {
    for (int k = 0; k < 100; ++k) {
      const Vector x = vec({u(gen), u(gen)});
      const Vector g = f.gradient(x);
      const Matrix h = f.hessian(x);
      EXPECT_LE((g - fd_gradient(f, x)).norm(), 1e-5 * (1 + g.norm()));
      EXPECT_LE((h - fd_hessian(f, x)).norm(), 1e-4 * (1 + h.norm()));
      EXPECT_LE((h - h.transpose()).norm(), 1e-12);
    }
  }
}

TEST(TestFnProperty, GeneratorIsLinear) {
  Matrix sigma(2, 2);
  sigma << 1, 0.2, 0.1, 0.8;
  const auto c = state_diag_coefficients(vec({0.3, -0.5}), vec({1, 1}), vec({0.2, 0.1}));
  const auto dom = oracle::orthant_with_matrix(Matrix::Identity(2, 2));
  const auto f = make_bump_test_fn(dom, vec({0, 0}), 1.0, -1);
  const auto g = exp_fn(vec({0.1, 0.4}));
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.2), coef(0.1, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double a = coef(gen), b = coef(gen);
    const Vector x = vec({u(gen), u(gen)});
    const double lhs = apply_generator(c, sum(scale(f, a), scale(g, b)), x);
    const double rhs = a * apply_generator(c, f, x) + b * apply_generator(c, g, x);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(rhs)));
  }
}

TEST(TestFnProperty, PositiveCombinationsStayAdmissible) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-0.5, 0.5), coef(0.1, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix r = Matrix::Identity(2, 2);
    r(0, 1) = u(gen);
    r(1, 0) = u(gen);
    const auto dom = oracle::orthant_with_matrix(r);
    std::vector<TestFunction> parts{make_bump_test_fn(dom, vec({0, 0}), 0.5, -1),
                                    make_bump_test_fn(dom, vec({0, 1.0}), 0.4, -1),
                                    make_bump_test_fn(dom, vec({1.0, 0}), 0.4, -1)};
    try {
      parts.push_back(make_linear_test_fn(dom, vec({1, 1})));
    } catch (const ObliqueSignViolation&) {
    }
    TestFunction total = scale(parts[0], coef(gen));
    for (std::size_t k = 1; k < parts.size(); ++k) total = sum(total, scale(parts[k], coef(gen)));
    for (const auto& p : parts) EXPECT_TRUE(check_admissible(dom, p, false, 300).admissible);
    EXPECT_TRUE(check_admissible(dom, total, false, 300).admissible);
  }
}

TEST(Admissibility, DetectsSignViolationAndVRequirement) {
  const auto lin = make_unchecked_linear_test_fn(vec({-1}));
  const auto rep = check_admissible(half_line(), lin, false);
  EXPECT_FALSE(rep.admissible);
  EXPECT_EQ(rep.violating_faces, FaceSet({0}));
  const auto up = make_linear_test_fn(half_line(), vec({1}));
  EXPECT_TRUE(check_admissible(half_line(), up, false).admissible);
  EXPECT_FALSE(check_admissible(half_line(), up, true).admissible);
}
