#ifndef SKLAB_STATS_HPP
#define SKLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/types.hpp"

namespace sklab::stats {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Sample mean with the standard error of independent samples.
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

/// Batch-means standard error for a correlated sequence.
inline MeanSe batch_means(std::span<const double> xs, int batches = 32) {
  if (xs.size() < static_cast<std::size_t>(2 * batches)) return mean_se(xs);
  const std::size_t len = xs.size() / static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += xs[static_cast<std::size_t>(b) * len + k];
    means[static_cast<std::size_t>(b)] = s / static_cast<double>(len);
  }
  MeanSe out = mean_se(means);
  double total = 0.0;
  for (double x : xs) total += x;
  out.mean = total / static_cast<double>(xs.size());
  out.n = xs.size();
  return out;
}

/// Least-squares polynomial coefficients (constant term first).
inline Vector polyfit(std::span<const double> x, std::span<const double> y, int degree) {
  if (x.size() != y.size() || x.size() < static_cast<std::size_t>(degree + 1)) {
    throw InvalidArgument("polyfit needs at least degree + 1 points");
  }
  Matrix v(static_cast<Eigen::Index>(x.size()), degree + 1);
  Vector rhs(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      v(static_cast<Eigen::Index>(i), d) = p;
      p *= x[i];
    }
    rhs(static_cast<Eigen::Index>(i)) = y[i];
  }
  return v.colPivHouseholderQr().solve(rhs);
}

/// Kolmogorov distance sup |F_n - F| between the empirical law of the
/// samples and a continuous CDF.
inline double kolmogorov_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) return 1.0;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace sklab::stats

#endif  // SKLAB_STATS_HPP
