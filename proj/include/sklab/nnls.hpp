#ifndef SKLAB_NNLS_HPP
#define SKLAB_NNLS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sklab/types.hpp"

namespace sklab {

/// Lawson-Hanson active-set solver for min |A x - b| subject to x >= 0.
inline Vector nnls(const Matrix& a, const Vector& b, double tol = 1e-12) {
  const int n = static_cast<int>(a.cols());
  Vector x = Vector::Zero(n);
  if (n == 0) return x;

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * std::max(1.0, b.cwiseAbs().maxCoeff()));
  std::vector<bool> passive(n, false);
  Vector w = a.transpose() * (b - a * x);

  auto solve_passive = [&](Vector& s) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    Matrix sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Vector sol = sub.completeOrthogonalDecomposition().solve(b);
    s.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sol(static_cast<Eigen::Index>(k));
  };

  const int max_outer = 3 * n + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    int enter = -1;
    double best = tol * scale;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && w(j) > best) {
        best = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    passive[enter] = true;

    Vector s;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(s);
      bool feasible = true;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && s(j) <= 0.0) feasible = false;
      }
      if (feasible) break;
      double alpha = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (passive[j] && s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
      }
      x += alpha * (s - x);
      for (int j = 0; j < n; ++j) {
        if (passive[j] && x(j) <= tol) {
          passive[j] = false;
          x(j) = 0.0;
        }
      }
    }
    x = s;
    for (int j = 0; j < n; ++j) {
      if (!passive[j]) x(j) = 0.0;
    }
    w = a.transpose() * (b - a * x);
  }
  return x;
}

}  // namespace sklab

#endif  // SKLAB_NNLS_HPP
