#ifndef SKLAB_LP_HPP
#define SKLAB_LP_HPP

// Dense two-phase simplex for the small linear programs that show up in the
// geometry queries (stratum feasibility, U/V classification). Problems have
// at most a few dozen rows, so a full tableau with Bland's rule is plenty.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/types.hpp"

namespace sklab {

/// maximize c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,
/// x_j >= 0 unless free[j].
struct LpProblem {
  Vector objective;
  Matrix a_ub;
  Vector b_ub;
  Matrix a_eq;
  Vector b_eq;
  std::vector<bool> free;

  explicit LpProblem(int num_vars)
      : objective(Vector::Zero(num_vars)),
        a_ub(0, num_vars),
        b_ub(0),
        a_eq(0, num_vars),
        b_eq(0),
        free(num_vars, false) {}

  int num_vars() const { return static_cast<int>(objective.size()); }

  void add_le(const Vector& row, double rhs) {
    a_ub.conservativeResize(a_ub.rows() + 1, Eigen::NoChange);
    a_ub.row(a_ub.rows() - 1) = row.transpose();
    b_ub.conservativeResize(b_ub.size() + 1);
    b_ub(b_ub.size() - 1) = rhs;
  }

  void add_eq(const Vector& row, double rhs) {
    a_eq.conservativeResize(a_eq.rows() + 1, Eigen::NoChange);
    a_eq.row(a_eq.rows() - 1) = row.transpose();
    b_eq.conservativeResize(b_eq.size() + 1);
    b_eq(b_eq.size() - 1) = rhs;
  }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
};

struct LpOptions {
  double pivot_tol = 1e-11;
  double feasibility_tol = 1e-9;
  int max_iterations = 5000;
};

namespace detail {

class SimplexTableau {
 public:
  SimplexTableau(Matrix tableau, std::vector<int> basis, const LpOptions& opts)
      : t_(std::move(tableau)), basis_(std::move(basis)), opts_(opts) {}

  Matrix& table() { return t_; }
  std::vector<int>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index rhs() const { return t_.cols() - 1; }

  void pivot(Eigen::Index row, int col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  /// Runs Bland's rule over columns [0, allowed_cols). Returns false when
  /// the objective is unbounded.
  bool optimize(int allowed_cols, int& iterations) {
    const Eigen::Index obj = rows();
    for (;;) {
      if (++iterations > opts_.max_iterations) {
        throw LpNumericalFailure("simplex iteration limit reached");
      }
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j) {
        if (t_(obj, j) < -opts_.pivot_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < obj; ++i) {
        const double a = t_(i, enter);
        if (a <= opts_.pivot_tol) continue;
        const double ratio = t_(i, rhs()) / a;
        if (leave < 0 || ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

 private:
  Matrix t_;
  std::vector<int> basis_;
  LpOptions opts_;
};

}  // namespace detail

inline LpResult solve_lp(const LpProblem& lp, const LpOptions& opts = {}) {
  const int n = lp.num_vars();
  const int m_ub = static_cast<int>(lp.a_ub.rows());
  const int m_eq = static_cast<int>(lp.a_eq.rows());
  const int m = m_ub + m_eq;

  // Standard form columns: one per nonneg variable, two per free variable,
  // one slack per inequality row, one artificial per row.
  std::vector<int> pos_col(n), neg_col(n, -1);
  int cols = 0;
  for (int j = 0; j < n; ++j) {
    pos_col[j] = cols++;
    if (lp.free[j]) neg_col[j] = cols++;
  }
  const int slack0 = cols;
  cols += m_ub;
  const int art0 = cols;
  cols += m;

  Matrix t = Matrix::Zero(m + 1, cols + 1);
  auto fill_row = [&](int r, const auto& coeffs, double rhs, int slack) {
    const double sign = rhs < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      t(r, pos_col[j]) = sign * coeffs(j);
      if (neg_col[j] >= 0) t(r, neg_col[j]) = -sign * coeffs(j);
    }
    if (slack >= 0) t(r, slack) = sign;
    t(r, art0 + r) = 1.0;
    t(r, cols) = sign * rhs;
  };
  for (int i = 0; i < m_ub; ++i) fill_row(i, lp.a_ub.row(i), lp.b_ub(i), slack0 + i);
  for (int i = 0; i < m_eq; ++i) fill_row(m_ub + i, lp.a_eq.row(i), lp.b_eq(i), -1);

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = art0 + i;

  // Phase 1: maximize -sum(artificials).
  for (int i = 0; i < m; ++i) t.row(m) -= t.row(i);
  t.block(m, art0, 1, m).setZero();

  detail::SimplexTableau tab(std::move(t), std::move(basis), opts);
  LpResult result;
  tab.optimize(art0, result.iterations);
  Matrix& tb = tab.table();
  if (-tb(m, cols) > opts.feasibility_tol * std::max(1.0, tb.col(cols).head(m).cwiseAbs().maxCoeff())) {
    result.status = LpStatus::kInfeasible;
    return result;
  }
  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[i] < art0) continue;
    for (int j = 0; j < art0; ++j) {
      if (std::abs(tb(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase 2.
  tb.row(m).setZero();
  for (int j = 0; j < n; ++j) {
    tb(m, pos_col[j]) = -lp.objective(j);
    if (neg_col[j] >= 0) tb(m, neg_col[j]) = lp.objective(j);
  }
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis()[i];
    const double f = tb(m, b);
    if (f != 0.0) tb.row(m) -= f * tb.row(i);
  }
  if (!tab.optimize(art0, result.iterations)) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  Vector standard = Vector::Zero(cols);
  for (int i = 0; i < m; ++i) standard(tab.basis()[i]) = tb(i, cols);
  result.x.resize(n);
  for (int j = 0; j < n; ++j) {
    result.x(j) = standard(pos_col[j]) - (neg_col[j] >= 0 ? standard(neg_col[j]) : 0.0);
  }
  result.objective = lp.objective.dot(result.x);
  result.status = LpStatus::kOptimal;
  return result;
}

}  // namespace sklab

#endif  // SKLAB_LP_HPP
