#ifndef SKLAB_VERIFY_HPP
#define SKLAB_VERIFY_HPP

// Statistical checks of the submartingale-problem properties on simulated
// ensembles. For an admissible test function f,
//
//   S^f(t) = f(Z(t)) - f(Z(0)) - int_0^t L f(Z(u)) du
//
// must be a submartingale; the checks estimate E[S^f(t) - S^f(s)], overall
// and conditioned on coarse bins of the distance from Z(s) to the boundary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sklab/errors.hpp"
#include "sklab/generator.hpp"
#include "sklab/geometry.hpp"
#include "sklab/simulate.hpp"
#include "sklab/skorokhod.hpp"
#include "sklab/stats.hpp"
#include "sklab/types.hpp"

namespace sklab {

using TimePair = std::pair<double, double>;

/// Left-endpoint quadrature of the compensator, matching the Euler filtration.
inline DiscretePath compute_sf_path(const Coefficients& coeffs, const TestFunction& f, const DiscretePath& z_path) {
  const int n = z_path.size();
  Matrix s(1, n);
  if (n == 0) return DiscretePath({}, s);
  const double f0 = f.value(z_path.point(0));
  double integral = 0.0;
  s(0, 0) = 0.0;
  for (int k = 1; k < n; ++k) {
    const Vector prev = z_path.point(k - 1);
    integral += apply_generator(coeffs, f, prev) * (z_path.times[k] - z_path.times[k - 1]);
    s(0, k) = f.value(z_path.point(k)) - f0 - integral;
  }
  return DiscretePath(z_path.times, std::move(s));
}

namespace detail {

/// Index of `t` on the grid, or -1 if the grid does not reach it.
inline int grid_index(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * std::max(1.0, std::abs(t)));
  if (it == times.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t))) return -1;
  return static_cast<int>(it - times.begin());
}

}  // namespace detail

struct BinStatistic {
  double distance_lo = 0.0;
  double distance_hi = 0.0;
  stats::MeanSe estimate;
  bool passed = true;
};

struct PairStatistic {
  double s = 0.0;
  double t = 0.0;
  stats::MeanSe estimate;
  bool passed = true;
  std::vector<BinStatistic> bins;
};

struct SubmartingaleReport {
  std::string test_fn_id;
  std::vector<PairStatistic> pairs;
  double z_threshold = 3.0;
  bool passed = true;
  std::vector<std::string> warnings;
};

struct SubmartingaleOptions {
  int bins = 8;
  double z_threshold = 3.0;
  std::size_t min_bin_samples = 30;
  /// Check admissibility first (disable only for planted negative controls).
  bool require_admissible = true;
};

inline SubmartingaleReport test_submartingale(std::span<const SimOutput> paths, const PolyhedralDomain& domain,
                                              const Coefficients& coeffs, const TestFunction& f,
                                              const std::vector<TimePair>& time_pairs,
                                              const SubmartingaleOptions& opts = {}) {
  if (opts.require_admissible) {
    const bool v_nonempty = !is_completely_s(domain).completely_s;
    const auto adm = check_admissible(domain, f, v_nonempty);
    if (!adm.admissible) {
      throw InadmissibleTestFunction("test function '" + f.id + "' is not admissible (faces " +
                                     format_face_set(adm.violating_faces) + ")");
    }
  }
  SubmartingaleReport rep;
  rep.test_fn_id = f.id;
  rep.z_threshold = opts.z_threshold;

  std::vector<DiscretePath> sf;
  sf.reserve(paths.size());
  for (const SimOutput& p : paths) sf.push_back(compute_sf_path(coeffs, f, p.z_path));

  for (const auto& [s, t] : time_pairs) {
    if (!(s < t)) throw InvalidArgument("time pair must satisfy s < t");
    PairStatistic ps;
    ps.s = s;
    ps.t = t;
    std::vector<std::pair<double, double>> samples;  // (distance at s, increment)
    for (std::size_t p = 0; p < paths.size(); ++p) {
      const auto& times = paths[p].z_path.times;
      const int is = detail::grid_index(times, s);
      const int it = detail::grid_index(times, t);
      if (is < 0 || it < 0) continue;
      samples.emplace_back(domain.distance_to_boundary(paths[p].z_path.point(is)), sf[p].values(0, it) - sf[p].values(0, is));
    }
    if (samples.empty()) {
      rep.warnings.push_back("no path covers time pair (" + std::to_string(s) + ", " + std::to_string(t) + ")");
      continue;
    }
    std::vector<double> incs;
    incs.reserve(samples.size());
    for (const auto& smp : samples) incs.push_back(smp.second);
    ps.estimate = stats::mean_se(incs);
    ps.passed = ps.estimate.mean >= -opts.z_threshold * ps.estimate.se;

    std::stable_sort(samples.begin(), samples.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t per_bin = samples.size() / static_cast<std::size_t>(std::max(1, opts.bins));
    for (int b = 0; b < opts.bins; ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * per_bin;
      const std::size_t hi = b + 1 == opts.bins ? samples.size() : lo + per_bin;
      if (hi - lo < opts.min_bin_samples) {
        rep.warnings.push_back("bin " + std::to_string(b) + " of pair (" + std::to_string(s) + ", " +
                               std::to_string(t) + ") has too few samples; dropped");
        continue;
      }
      std::vector<double> bin_incs;
      for (std::size_t k = lo; k < hi; ++k) bin_incs.push_back(samples[k].second);
      BinStatistic bs;
      bs.distance_lo = samples[lo].first;
      bs.distance_hi = samples[hi - 1].first;
      bs.estimate = stats::mean_se(bin_incs);
      bs.passed = bs.estimate.mean >= -opts.z_threshold * bs.estimate.se;
      ps.passed = ps.passed && bs.passed;
      ps.bins.push_back(bs);
    }
    rep.passed = rep.passed && ps.passed;
    rep.pairs.push_back(std::move(ps));
  }
  return rep;
}

/// Split of the linear-test-function statistic into its Brownian part and
/// its pushing part <v, Y(t) - Y(s)>, which is nonnegative when v is
/// admissible.
struct LinearDecomposition {
  stats::MeanSe statistic;
  stats::MeanSe martingale;
  stats::MeanSe pushing;
  double max_residual = 0.0;  // max over paths of |statistic - martingale - pushing|
};

inline LinearDecomposition decompose_linear_statistic(std::span<const SimOutput> paths, const Coefficients& coeffs,
                                                      const Vector& v, TimePair pair) {
  const TestFunction f = make_unchecked_linear_test_fn(v);
  std::vector<double> stat, mart, push;
  LinearDecomposition out;
  for (const SimOutput& p : paths) {
    const auto& times = p.z_path.times;
    const int is = detail::grid_index(times, pair.first);
    const int it = detail::grid_index(times, pair.second);
    if (is < 0 || it < 0) continue;
    const DiscretePath sf = compute_sf_path(coeffs, f, p.z_path);
    const double st = sf.values(0, it) - sf.values(0, is);
    double mg = 0.0;
    for (int k = is; k < it; ++k) {
      const Vector dw = p.w_path.point(k + 1) - p.w_path.point(k);
      mg += v.dot(coeffs.dispersion_at(p.z_path.point(k)) * dw);
    }
    const double ps = v.dot(p.y_path.point(it) - p.y_path.point(is));
    stat.push_back(st);
    mart.push_back(mg);
    push.push_back(ps);
    out.max_residual = std::max(out.max_residual, std::abs(st - mg - ps));
  }
  out.statistic = stats::mean_se(stat);
  out.martingale = stats::mean_se(mart);
  out.pushing = stats::mean_se(push);
  return out;
}

struct OccupationRow {
  double epsilon = 0.0;
  stats::MeanSe fraction;
};

struct OccupationTable {
  std::vector<OccupationRow> rows;  // sorted by decreasing epsilon
  bool monotone = true;
  /// Polynomial extrapolation of the per-path occupation curve to eps = 0.
  stats::MeanSe intercept;
  int fit_degree = 2;
};

/// Fraction of time (trapezoid rule) each path spends within epsilon of
/// the boundary, with an extrapolated eps -> 0 intercept.
inline OccupationTable test_boundary_occupation(std::span<const SimOutput> paths, const PolyhedralDomain& domain,
                                                std::vector<double> epsilons, int fit_degree = 2) {
  if (paths.empty()) throw InvalidArgument("ensemble is empty");
  if (epsilons.empty()) throw InvalidArgument("need at least one epsilon");
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  OccupationTable table;
  const int degree = std::min<int>(fit_degree, static_cast<int>(epsilons.size()) - 1);
  table.fit_degree = degree;
  std::vector<std::vector<double>> frac(epsilons.size());
  std::vector<double> intercepts;
  for (const SimOutput& p : paths) {
    const DiscretePath& z = p.z_path;
    const int n = z.size();
    std::vector<double> per(epsilons.size(), 0.0);
    const double total = n > 1 ? z.times.back() - z.times.front() : 1.0;
    for (int k = 0; k < n; ++k) {
      double w = 1.0;
      if (n > 1) {
        const double left = k > 0 ? z.times[k] - z.times[k - 1] : 0.0;
        const double right = k + 1 < n ? z.times[k + 1] - z.times[k] : 0.0;
        w = 0.5 * (left + right) / total;
      }
      const double dist = domain.distance_to_boundary(z.point(k));
      for (std::size_t e = 0; e < epsilons.size(); ++e) {
        if (dist < epsilons[e]) per[e] += w;
      }
    }
    for (std::size_t e = 0; e < epsilons.size(); ++e) frac[e].push_back(per[e]);
    if (epsilons.size() >= 2) intercepts.push_back(stats::polyfit(epsilons, per, degree)(0));
  }
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    table.rows.push_back({epsilons[e], stats::mean_se(frac[e])});
    if (e > 0 && table.rows[e].fraction.mean > table.rows[e - 1].fraction.mean) table.monotone = false;
  }
  table.intercept = stats::mean_se(intercepts);
  return table;
}

struct CheckItem {
  std::string name;
  bool passed = true;
  nlohmann::json detail;
};

struct VerificationReport {
  bool passed = true;
  std::vector<CheckItem> items;

  void add(CheckItem item) {
    passed = passed && item.passed;
    items.push_back(std::move(item));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["passed"] = passed;
    j["checks"] = nlohmann::json::array();
    for (const auto& it : items) j["checks"].push_back({{"name", it.name}, {"passed", it.passed}, {"detail", it.detail}});
    return j;
  }
};

inline nlohmann::json to_json(const stats::MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}, {"n", m.n}}; }

inline nlohmann::json to_json(const SubmartingaleReport& r) {
  nlohmann::json j;
  j["test_fn"] = r.test_fn_id;
  j["z_threshold"] = r.z_threshold;
  j["passed"] = r.passed;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json pj{{"s", p.s}, {"t", p.t}, {"estimate", to_json(p.estimate)}, {"passed", p.passed}};
    pj["bins"] = nlohmann::json::array();
    for (const auto& b : p.bins) {
      pj["bins"].push_back({{"distance_lo", b.distance_lo},
                            {"distance_hi", b.distance_hi},
                            {"estimate", to_json(b.estimate)},
                            {"passed", b.passed}});
    }
    j["pairs"].push_back(std::move(pj));
  }
  j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::json to_json(const OccupationTable& t) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : t.rows) j["rows"].push_back({{"epsilon", r.epsilon}, {"fraction", to_json(r.fraction)}});
  j["monotone"] = t.monotone;
  j["intercept"] = to_json(t.intercept);
  j["fit_degree"] = t.fit_degree;
  return j;
}

struct CrossCheckOptions {
  Vector initial_point;
  std::vector<TimePair> time_pairs;  // defaults derived from the horizon when empty
  SubmartingaleOptions submartingale;
  int hull_windows_per_path = 100;
  double hull_tol_per_step = 1e-7;
  std::uint64_t seed = 1;
};

inline std::vector<TimePair> default_time_pairs(double horizon, double step) {
  auto snap = [step](double t) { return std::round(t / step) * step; };
  return {{snap(0.25 * horizon), snap(0.5 * horizon)},
          {snap(0.5 * horizon), snap(0.75 * horizon)},
          {snap(0.25 * horizon), snap(horizon)},
          {snap(0.5 * horizon), snap(horizon)}};
}

/// Checks that an ensemble produced under the SDER definition satisfies the
/// four submartingale-problem properties plus the pushing-cone property of
/// (Z, Y).
inline VerificationReport cross_check_formulations(std::span<const SimOutput> paths, const PolyhedralDomain& domain,
                                                   const Coefficients& coeffs,
                                                   const std::vector<TestFunction>& battery,
                                                   const CrossCheckOptions& opts) {
  if (battery.empty()) throw InvalidArgument("test function battery is empty");
  if (paths.empty()) throw InvalidArgument("ensemble is empty");
  const auto cs = is_completely_s(domain);
  const bool v_nonempty = !cs.completely_s;
  for (const TestFunction& f : battery) {
    const auto adm = check_admissible(domain, f, v_nonempty);
    if (!adm.admissible) {
      throw InadmissibleTestFunction("battery member '" + f.id + "' is not admissible");
    }
  }

  VerificationReport rep;

  {
    CheckItem item{"initial_condition", true, {}};
    long bad = 0;
    for (const SimOutput& p : paths) {
      const Vector z0 = p.z_path.point(0);
      bool same = z0.size() == opts.initial_point.size();
      for (Eigen::Index i = 0; same && i < z0.size(); ++i) same = z0(i) == opts.initial_point(i);
      if (!same) ++bad;
    }
    item.passed = bad == 0;
    item.detail = {{"paths_with_wrong_start", bad}};
    rep.add(std::move(item));
  }

  {
    CheckItem item{"containment", true, {}};
    long bad = 0;
    double worst = 0.0;
    for (const SimOutput& p : paths) {
      for (int k = 0; k < p.z_path.size(); ++k) {
        const Vector z = p.z_path.point(k);
        const double v = domain.slacks(z).minCoeff();
        worst = std::min(worst, v);
        if (v < -domain.face_tolerance(z)) ++bad;
      }
    }
    item.passed = bad == 0;
    item.detail = {{"points_outside", bad}, {"worst_slack", worst}};
    rep.add(std::move(item));
  }

  {
    std::vector<TimePair> pairs = opts.time_pairs;
    if (pairs.empty()) {
      const auto& t = paths.front().z_path.times;
      const double step = t.size() > 1 ? t[1] - t[0] : 1.0;
      pairs = default_time_pairs(t.back(), step);
    }
    for (const TestFunction& f : battery) {
      SubmartingaleOptions sopts = opts.submartingale;
      sopts.require_admissible = false;  // checked above
      const auto sr = test_submartingale(paths, domain, coeffs, f, pairs, sopts);
      rep.add(CheckItem{"submartingale:" + f.id, sr.passed, to_json(sr)});
    }
  }

  {
    CheckItem item{"v_occupation", true, {}};
    long in_v = 0, total = 0;
    std::unordered_map<std::uint64_t, bool> is_v;
    for (const SimOutput& p : paths) {
      const int n = p.z_path.size() - (p.tau_v ? 1 : 0);
      for (int k = 0; k < n; ++k) {
        ++total;
        const std::uint64_t mask = face_mask(touching_faces(domain, p.z_path.point(k)));
        if (mask == 0) continue;
        auto it = is_v.find(mask);
        if (it == is_v.end()) {
          it = is_v.emplace(mask, classify_face_set(domain, faces_of_mask(mask)).cls == BoundaryClass::kV).first;
        }
        if (it->second) ++in_v;
      }
    }
    item.passed = in_v == 0;
    item.detail = {{"points_in_v", in_v}, {"points", total}, {"completely_s", cs.completely_s}};
    rep.add(std::move(item));
  }

  {
    CheckItem item{"hull_property", true, {}};
    std::mt19937_64 gen(opts.seed);
    long checked = 0, failed = 0;
    for (const SimOutput& p : paths) {
      const int n = p.z_path.size();
      if (n < 2) continue;
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int w = 0; w < opts.hull_windows_per_path; ++w) {
        int a = pick(gen), b = pick(gen);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        ++checked;
        if (!verify_hull_property(domain, p.z_path, p.y_path, {a, b}, opts.hull_tol_per_step * (b - a))) ++failed;
      }
    }
    item.passed = failed == 0;
    item.detail = {{"windows", checked}, {"failed", failed}};
    rep.add(std::move(item));
  }
  return rep;
}

}  // namespace sklab

#endif  // SKLAB_VERIFY_HPP
