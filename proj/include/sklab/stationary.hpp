#ifndef SKLAB_STATIONARY_HPP
#define SKLAB_STATIONARY_HPP

// Long-run (ergodic) estimates of the stationary law and the check that it
// puts no mass on the boundary and satisfies  int L f dpi <= 0  for every
// admissible test function f.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sklab/errors.hpp"
#include "sklab/generator.hpp"
#include "sklab/geometry.hpp"
#include "sklab/simulate.hpp"
#include "sklab/stats.hpp"
#include "sklab/types.hpp"
#include "sklab/verify.hpp"

namespace sklab {

struct StationaryEstimate {
  /// Thinned post-burn-in states, pooled path by path in time order.
  Matrix samples;
  double burn_in = 0.0;
  Vector mean;
  Matrix covariance;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(samples.cols()); }

  double boundary_mass_at(const PolyhedralDomain& domain, double eps) const {
    if (samples.cols() == 0) return 0.0;
    long hits = 0;
    for (Eigen::Index k = 0; k < samples.cols(); ++k) {
      if (domain.distance_to_boundary(samples.col(k)) < eps) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples.cols());
  }
};

inline constexpr int kMinStationarySamples = 1000;

/// Samples every `thin` steps after `burn_in` (time units), pooled over
/// config.paths independent paths.
inline StationaryEstimate estimate_stationary(const PolyhedralDomain& domain, const Coefficients& coeffs,
                                              SimConfig config, double burn_in, int thin, int workers = 1) {
  if (!(burn_in >= 0.0) || !(burn_in < config.horizon / 2.0)) {
    throw InvalidArgument("burn-in must lie in [0, horizon/2)");
  }
  if (thin < 1) throw InvalidArgument("thinning interval must be positive");
  if (!is_completely_s(domain).completely_s) throw NonCompletelyS("stationary estimation needs a completely-S domain");
  config.record_stride = thin;
  const EnsembleResult ens = simulate_ensemble(domain, coeffs, config, workers);

  StationaryEstimate est;
  est.burn_in = burn_in;
  for (const auto& [idx, msg] : ens.failures) est.warnings.push_back("path " + std::to_string(idx) + ": " + msg);
  std::vector<Vector> pooled;
  for (const SimOutput& p : ens.paths) {
    for (int k = 0; k < p.z_path.size(); ++k) {
      if (p.z_path.times[k] > burn_in) pooled.push_back(p.z_path.point(k));
    }
  }
  if (static_cast<int>(pooled.size()) < kMinStationarySamples) {
    throw InvalidArgument("only " + std::to_string(pooled.size()) + " samples after thinning; need " +
                          std::to_string(kMinStationarySamples));
  }
  const int j = domain.dimension();
  est.samples.resize(j, static_cast<Eigen::Index>(pooled.size()));
  for (std::size_t k = 0; k < pooled.size(); ++k) est.samples.col(static_cast<Eigen::Index>(k)) = pooled[k];
  est.mean = est.samples.rowwise().mean();
  const Matrix centered = est.samples.colwise() - est.mean;
  est.covariance = centered * centered.transpose() / static_cast<double>(std::max<Eigen::Index>(1, est.samples.cols() - 1));

  // First-half vs second-half drift of the first two moments, per path
  // segment, so that dependence within a path is respected.
  for (int c = 0; c < j; ++c) {
    for (int power = 1; power <= 2; ++power) {
      std::vector<double> first, second;
      for (const SimOutput& p : ens.paths) {
        std::vector<double> seq;
        for (int k = 0; k < p.z_path.size(); ++k) {
          if (p.z_path.times[k] > burn_in) seq.push_back(std::pow(p.z_path.values(c, k), power));
        }
        const std::size_t half = seq.size() / 2;
        first.insert(first.end(), seq.begin(), seq.begin() + static_cast<long>(half));
        second.insert(second.end(), seq.begin() + static_cast<long>(half), seq.end());
      }
      const auto a = stats::batch_means(first);
      const auto b = stats::batch_means(second);
      const double se = std::sqrt(a.se * a.se + b.se * b.se);
      if (std::abs(a.mean - b.mean) > 5.0 * se) {
        est.warnings.push_back("NonStationaryWarning: moment " + std::to_string(power) + " of coordinate " +
                               std::to_string(c) + " differs between halves (" + std::to_string(a.mean) + " vs " +
                               std::to_string(b.mean) + ")");
      }
    }
  }
  return est;
}

struct IntegralCheck {
  std::string test_fn_id;
  stats::MeanSe integral;
  bool passed = true;
};

struct StationaryReport {
  std::vector<IntegralCheck> integrals;
  std::vector<std::pair<double, double>> shell_mass;  // (epsilon, mass)
  stats::MeanSe boundary_intercept;
  bool boundary_passed = true;
  bool passed = true;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["passed"] = passed;
    j["integrals"] = nlohmann::json::array();
    for (const auto& c : integrals) {
      j["integrals"].push_back({{"test_fn", c.test_fn_id}, {"integral", sklab::to_json(c.integral)}, {"passed", c.passed}});
    }
    j["shell_mass"] = nlohmann::json::array();
    for (const auto& [e, m] : shell_mass) j["shell_mass"].push_back({{"epsilon", e}, {"mass", m}});
    j["boundary_intercept"] = sklab::to_json(boundary_intercept);
    j["boundary_passed"] = boundary_passed;
    return j;
  }
};

struct StationaryCheckOptions {
  double z_threshold = 3.0;
  double boundary_z = 2.0;
  int batches = 32;
};

/// For each battery member estimates int L f dpi with a batch-means error and
/// requires it to be <= z * SE. Boundary mass is extrapolated linearly from
/// the epsilon-shell masses of each batch to epsilon = 0.
inline StationaryReport check_stationary_characterization(const StationaryEstimate& est,
                                                          const PolyhedralDomain& domain, const Coefficients& coeffs,
                                                          const std::vector<TestFunction>& battery,
                                                          std::vector<double> epsilons,
                                                          const StationaryCheckOptions& opts = {}) {
  StationaryReport rep;
  const Eigen::Index n = est.samples.cols();
  for (const TestFunction& f : battery) {
    std::vector<double> lf(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) lf[static_cast<std::size_t>(k)] = apply_generator(coeffs, f, est.samples.col(k));
    IntegralCheck c;
    c.test_fn_id = f.id;
    c.integral = stats::batch_means(lf, opts.batches);
    c.passed = c.integral.mean <= opts.z_threshold * c.integral.se;
    rep.passed = rep.passed && c.passed;
    rep.integrals.push_back(c);
  }

  if (!epsilons.empty()) {
    std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
    for (double e : epsilons) rep.shell_mass.emplace_back(e, est.boundary_mass_at(domain, e));
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) dist[static_cast<std::size_t>(k)] = domain.distance_to_boundary(est.samples.col(k));
    if (epsilons.size() >= 2) {
      const std::size_t len = dist.size() / static_cast<std::size_t>(opts.batches);
      std::vector<double> intercepts;
      for (int b = 0; b < opts.batches && len > 0; ++b) {
        std::vector<double> mass(epsilons.size(), 0.0);
        for (std::size_t k = static_cast<std::size_t>(b) * len; k < static_cast<std::size_t>(b + 1) * len; ++k) {
          for (std::size_t e = 0; e < epsilons.size(); ++e) {
            if (dist[k] < epsilons[e]) mass[e] += 1.0 / static_cast<double>(len);
          }
        }
        intercepts.push_back(stats::polyfit(epsilons, mass, 1)(0));
      }
      rep.boundary_intercept = stats::mean_se(intercepts);
      rep.boundary_passed = std::abs(rep.boundary_intercept.mean) <= opts.boundary_z * rep.boundary_intercept.se;
    }
    rep.passed = rep.passed && rep.boundary_passed;
  }
  return rep;
}

/// Per-coordinate marginal histograms over [lo, hi] of the samples.
struct MarginalHistogram {
  std::vector<double> edges;
  Matrix counts;  // bins x J
};

inline MarginalHistogram marginal_histograms(const StationaryEstimate& est, int bins) {
  MarginalHistogram h;
  const int j = static_cast<int>(est.samples.rows());
  const double lo = est.samples.minCoeff();
  double hi = est.samples.maxCoeff();
  if (!(hi > lo)) hi = lo + 1.0;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
  h.counts = Matrix::Zero(bins, j);
  for (Eigen::Index k = 0; k < est.samples.cols(); ++k) {
    for (int c = 0; c < j; ++c) {
      int b = static_cast<int>((est.samples(c, k) - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      h.counts(b, c) += 1.0;
    }
  }
  return h;
}

}  // namespace sklab

#endif  // SKLAB_STATIONARY_HPP
