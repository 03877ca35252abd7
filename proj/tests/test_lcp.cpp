#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sklab/lcp.hpp"

using sklab::LcpStatus;
using sklab::LemkeSolver;
using sklab::Matrix;
using sklab::Vector;

TEST(Lemke, NonnegativeQGivesZero) {
  LemkeSolver s;
  const auto r = s.solve(Matrix::Identity(2, 2), (Vector(2) << 1, 0).finished());
  EXPECT_EQ(r.status, LcpStatus::kSolved);
  EXPECT_EQ(r.z.norm(), 0.0);
  EXPECT_EQ(r.pivots, 0);
}

TEST(Lemke, SolvesSmallPMatrixProblem) {
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  const Vector q = (Vector(2) << -5, -6).finished();
  LemkeSolver s;
  const auto r = s.solve(m, q);
  ASSERT_EQ(r.status, LcpStatus::kSolved);
  // Both positive: 2z1 + z2 = 5, z1 + 2z2 = 6.
  EXPECT_NEAR(r.z(0), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.z(1), 7.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.w.norm(), 0.0, 1e-12);
}

TEST(Lemke, RayTerminationOnInfeasibleProblem) {
  // w = q + M z with M = -I, q < 0 has no solution.
  LemkeSolver s;
  const auto r = s.solve(-Matrix::Identity(2, 2), (Vector(2) << -1, -1).finished());
  EXPECT_EQ(r.status, LcpStatus::kRayTermination);
}

TEST(Lemke, DegenerateTiesDoNotCycle) {
  Matrix m(3, 3);
  m << 1, 2, 0, 0, 1, 2, 2, 0, 1;
  const Vector q = (Vector(3) << -1, -1, -1).finished();
  LemkeSolver s;
  const auto r = s.solve(m, q);
  ASSERT_EQ(r.status, LcpStatus::kSolved);
  EXPECT_GE(r.w.minCoeff(), -1e-12);
  EXPECT_GE(r.z.minCoeff(), -1e-12);
  EXPECT_NEAR(r.w.dot(r.z), 0.0, 1e-12);
}

TEST(LemkeProperty, AgreesWithSupportEnumerationOnPMatrices) {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  LemkeSolver s;
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 4;
    // Strictly diagonally dominant with positive diagonal => P-matrix.
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      double off = 0.0;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        m(i, j) = nd(gen) * 0.5;
        off += std::abs(m(i, j));
      }
      m(i, i) = off + 0.1 + std::abs(nd(gen));
    }
    Vector q(n);
    for (int i = 0; i < n; ++i) q(i) = nd(gen);
    const auto ref = oracle::enumerate_lcp(m, q);
    ASSERT_EQ(ref.size(), 1u) << "P-matrix LCP must have a unique solution";
    const auto r = s.solve(m, q);
    ASSERT_EQ(r.status, LcpStatus::kSolved);
    EXPECT_LE((r.z - ref[0]).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 2000);
}

TEST(LemkeProperty, SolutionsAreComplementaryOnCopositivePlusMatrices) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  LemkeSolver s;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 4;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = u(gen);
    }
    Vector q(n);
    for (int i = 0; i < n; ++i) q(i) = nd(gen);
    const auto r = s.solve(m, q);
    ASSERT_EQ(r.status, LcpStatus::kSolved) << "nonnegative M always has a solution";
    EXPECT_GE(r.z.minCoeff(), -1e-10);
    EXPECT_GE(r.w.minCoeff(), -1e-10);
    EXPECT_NEAR(r.z.dot(r.w), 0.0, 1e-9);
    EXPECT_LE((r.w - q - m * r.z).cwiseAbs().maxCoeff(), 1e-10);
  }
}
