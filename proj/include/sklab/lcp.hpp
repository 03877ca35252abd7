#ifndef SKLAB_LCP_HPP
#define SKLAB_LCP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sklab/types.hpp"

namespace sklab {

enum class LcpStatus { kSolved, kRayTermination, kIterationLimit };

/// Solution of  w = q + M z,  w >= 0,  z >= 0,  w^T z = 0.
struct LcpResult {
  LcpStatus status = LcpStatus::kSolved;
  Vector z;
  Vector w;
  int pivots = 0;
};

/// Lemke's complementary pivoting with covering vector e = (1, ..., 1) and a
/// lexicographic ratio test, which rules out cycling on degenerate problems.
class LemkeSolver {
 public:
  explicit LemkeSolver(double pivot_tol = 1e-12, int max_pivots = 0)
      : pivot_tol_(pivot_tol), max_pivots_(max_pivots) {}

  LcpResult solve(const Matrix& m, const Vector& q) {
    const int n = static_cast<int>(q.size());
    LcpResult out;
    out.z = Vector::Zero(n);
    out.w = q;
    if (n == 0 || q.minCoeff() >= 0.0) return out;

    // Columns: w (0..n-1), z (n..2n-1), z0 (2n), rhs (2n+1).
    const int z0 = 2 * n;
    const int rhs = 2 * n + 1;
    tab_.setZero(n, 2 * n + 2);
    tab_.leftCols(n).setIdentity();
    tab_.middleCols(n, n) = -m;
    tab_.col(z0).setConstant(-1.0);
    tab_.col(rhs) = q;
    basis_.resize(n);
    for (int i = 0; i < n; ++i) basis_[i] = i;

    int leave = 0;
    for (int i = 1; i < n; ++i) {
      if (q(i) < q(leave) || (q(i) == q(leave) && lex_less_initial(i, leave, n))) leave = i;
    }
    pivot(leave, z0);
    ++out.pivots;
    // w_leave left the basis; its complement z_leave enters next.
    int entering = complement(leave, n);

    const int limit = max_pivots_ > 0 ? max_pivots_ : 50 * n + 100;
    for (;;) {
      if (out.pivots >= limit) {
        out.status = LcpStatus::kIterationLimit;
        break;
      }
      const int row = ratio_test(entering, n);
      if (row < 0) {
        out.status = LcpStatus::kRayTermination;
        break;
      }
      const int leaving_var = basis_[row];
      pivot(row, entering);
      ++out.pivots;
      if (leaving_var == z0) {
        out.status = LcpStatus::kSolved;
        break;
      }
      entering = complement(leaving_var, n);
    }

    Vector w = Vector::Zero(n);
    Vector z = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      const int b = basis_[i];
      const double v = std::max(0.0, tab_(i, rhs));
      if (b < n) {
        w(b) = v;
      } else if (b < 2 * n) {
        z(b - n) = v;
      }
    }
    out.z = z;
    out.w = q + m * z;
    return out;
  }

 private:
  static int complement(int var, int n) { return var < n ? var + n : var - n; }

  void pivot(int row, int col) {
    tab_.row(row) /= tab_(row, col);
    for (int i = 0; i < tab_.rows(); ++i) {
      if (i == row) continue;
      const double f = tab_(i, col);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(row);
    }
    basis_[row] = col;
  }

  // Initial tableau has B^{-1} = I; under the lexicographic perturbation
  // q_i + eps^i the larger index wins a tie on q.
  static bool lex_less_initial(int a, int b, int) { return a > b; }

  int ratio_test(int col, int n) const {
    const int rhs = 2 * n + 1;
    int best = -1;
    for (int i = 0; i < n; ++i) {
      const double a = tab_(i, col);
      if (a <= pivot_tol_) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      const double ab = tab_(best, col);
      const double ri = tab_(i, rhs) / a;
      const double rb = tab_(best, rhs) / ab;
      const double scale = std::max({1.0, std::abs(ri), std::abs(rb)});
      if (ri < rb - 1e-13 * scale) {
        best = i;
      } else if (std::abs(ri - rb) <= 1e-13 * scale) {
        // z0 leaves whenever it is among the tied rows.
        if (basis_[i] == 2 * n) {
          best = i;
        } else if (basis_[best] != 2 * n && lex_smaller(i, best, col, n)) {
          best = i;
        }
      }
    }
    return best;
  }

  // Compare rows of B^{-1} (held in the w columns) scaled by the pivot column.
  bool lex_smaller(int i, int j, int col, int n) const {
    const double ai = tab_(i, col);
    const double aj = tab_(j, col);
    for (int k = 0; k < n; ++k) {
      const double vi = tab_(i, k) / ai;
      const double vj = tab_(j, k) / aj;
      if (vi < vj - 1e-15) return true;
      if (vi > vj + 1e-15) return false;
    }
    return false;
  }

  double pivot_tol_;
  int max_pivots_;
  Matrix tab_;
  std::vector<int> basis_;
};

}  // namespace sklab

#endif  // SKLAB_LCP_HPP
