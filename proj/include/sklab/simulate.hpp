#ifndef SKLAB_SIMULATE_HPP
#define SKLAB_SIMULATE_HPP

// Reflected Euler-Maruyama for SDERs in polyhedral domains.
//
//   X-increment = b(Z) dt + sigma(Z) dW      (coefficients at the pre-step point)
//   (Z_next, l)  = pushing step from Z by that increment
//   Y_next       = Y + sum_i l^i d^i
//
// so that Z_k = z + sum b dt + sum sigma dW + Y_k holds at every step.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/generator.hpp"
#include "sklab/geometry.hpp"
#include "sklab/rng.hpp"
#include "sklab/skorokhod.hpp"
#include "sklab/types.hpp"

namespace sklab {

enum class ReflectionScheme {
  /// Pushed point lands on the boundary (Skorokhod map of each increment).
  kProjected,
  /// Pushing is doubled (mirror image) whenever the mirrored point is
  /// inside the domain; falls back to the projected point otherwise. Removes
  /// the O(sqrt(dt)) boundary atom of the projected scheme.
  kSymmetrized,
};

inline const char* to_string(ReflectionScheme s) {
  return s == ReflectionScheme::kProjected ? "projected" : "symmetrized";
}

struct SimConfig {
  double step = 1e-3;
  double horizon = 1.0;
  int paths = 1;
  std::uint64_t seed = 0;
  Vector initial_point;
  bool stop_on_v = true;
  /// Record every `record_stride` steps (the final state is always kept).
  int record_stride = 1;
  ReflectionScheme scheme = ReflectionScheme::kProjected;

  long num_steps() const { return std::lround(horizon / step); }
};

struct SimOutput {
  int path_index = 0;
  DiscretePath z_path;
  DiscretePath y_path;
  /// Running sum of the driving Brownian increments.
  DiscretePath w_path;
  /// Cumulative per-face local times, one column per recorded time.
  Matrix local_times;
  /// Step index at which the path was stopped on V, if any. Detection at
  /// finite dt is heuristic, hence always approximate.
  std::optional<long> tau_v;
  long boundary_step_count = 0;
  long steps_taken = 0;
  /// Nonempty when the path failed; the other fields are then partial.
  std::string failure;
};

class Simulator {
 public:
  Simulator(const PolyhedralDomain& domain, const Coefficients& coeffs, SimConfig config)
      : domain_(&domain), coeffs_(&coeffs), config_(std::move(config)) {
    if (!(config_.step > 0.0)) throw InvalidArgument("step must be positive");
    if (!(config_.horizon >= config_.step)) throw InvalidArgument("horizon must be at least one step");
    if (config_.paths < 1) throw InvalidArgument("paths must be positive");
    if (config_.record_stride < 1) throw InvalidArgument("record stride must be positive");
    if (coeffs.dimension != domain.dimension()) throw InvalidArgument("coefficients and domain dimensions differ");
    if (config_.initial_point.size() != domain.dimension()) {
      throw InvalidArgument("initial point has wrong dimension");
    }
    if (!domain.contains(config_.initial_point)) throw PointOutsideDomain("initial point outside the domain");
    completely_s_ = is_completely_s(domain).completely_s;
    if (!completely_s_ && !config_.stop_on_v) {
      throw NonCompletelyS("domain is not completely-S; simulation requires stop_on_v");
    }
  }

  const SimConfig& config() const { return config_; }
  bool completely_s() const { return completely_s_; }

  SimOutput run(int path_index) const {
    const PolyhedralDomain& dom = *domain_;
    const int j = dom.dimension();
    const int m = dom.num_faces();
    const long n_steps = config_.num_steps();
    const double dt = config_.step;
    const double sqrt_dt = std::sqrt(dt);
    const long stride = config_.record_stride;

    SkorokhodStepper stepper(dom, StepperOptions{.require_completely_s = false});
    const PathNormalStream normals(config_.seed, static_cast<std::uint64_t>(path_index));
    std::unordered_map<std::uint64_t, BoundaryClass> class_cache;

    const long capacity = n_steps / stride + 2;
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(capacity));
    Matrix zs(j, capacity), ys(j, capacity), ws(j, capacity), lts(m, capacity);

    Vector x = config_.initial_point;
    Vector y = Vector::Zero(j), w = Vector::Zero(j), lt = Vector::Zero(m);
    Vector b(j), xi(j), dw(j), inc(j), slack(m);
    Matrix sig(j, j);
    StepResult r;

    auto record = [&](long k) {
      const auto c = static_cast<Eigen::Index>(times.size());
      times.push_back(static_cast<double>(k) * dt);
      zs.col(c) = x;
      ys.col(c) = y;
      ws.col(c) = w;
      lts.col(c) = lt;
    };

    SimOutput out;
    out.path_index = path_index;
    record(0);
    long last_recorded = 0;
    long k = 1;
    try {
      for (; k <= n_steps; ++k) {
        coeffs_->drift(x, b);
        coeffs_->dispersion(x, sig);
        normals.fill(static_cast<std::uint64_t>(k), xi);
        dw = sqrt_dt * xi;
        inc.noalias() = dt * b;
        inc.noalias() += sig * dw;
        stepper.step_into(x, inc, r);
        if (r.status == StepStatus::kRayTermination) {
          if (!config_.stop_on_v) {
            throw LcpRayTermination("ray termination at step " + std::to_string(k), k);
          }
          out.tau_v = k - 1;
          break;
        }
        const bool pushed = r.pivots > 0 && r.local_times.maxCoeff() > 0.0;
        if (pushed && config_.scheme == ReflectionScheme::kSymmetrized) {
          Vector mirrored = r.z;
          mirrored.noalias() += dom.directions() * r.local_times;
          if ((dom.normals().transpose() * mirrored - dom.offsets()).minCoeff() >= 0.0) {
            r.z = mirrored;
            r.local_times *= 2.0;
          }
        }
        x = r.z;
        w += dw;
        if (pushed) {
          y.noalias() += dom.directions() * r.local_times;
          lt += r.local_times;
        }
        slack.noalias() = dom.normals().transpose() * x;
        slack -= dom.offsets();
        const double eps = dom.face_tolerance(x);
        std::uint64_t active = 0;
        for (int i = 0; i < m; ++i) {
          if (slack(i) <= eps) active |= std::uint64_t{1} << i;
        }
        if (active != 0) {
          ++out.boundary_step_count;
          if (config_.stop_on_v && !completely_s_) {
            auto it = class_cache.find(active);
            if (it == class_cache.end()) {
              it = class_cache.emplace(active, classify_face_set(dom, faces_of_mask(active)).cls).first;
            }
            if (it->second == BoundaryClass::kV) {
              out.tau_v = k;
              record(k);
              last_recorded = k;
              ++k;
              break;
            }
          }
        }
        if (k % stride == 0 || k == n_steps) {
          record(k);
          last_recorded = k;
        }
      }
    } catch (const Error& e) {
      out.failure = e.what();
    }
    out.steps_taken = out.tau_v ? *out.tau_v : std::min(k - 1, n_steps);
    if (last_recorded != out.steps_taken && out.failure.empty()) record(out.steps_taken);

    const auto cols = static_cast<Eigen::Index>(times.size());
    out.z_path = DiscretePath(times, zs.leftCols(cols));
    out.y_path = DiscretePath(times, ys.leftCols(cols));
    out.w_path = DiscretePath(times, ws.leftCols(cols));
    out.local_times = lts.leftCols(cols);
    return out;
  }

 private:
  const PolyhedralDomain* domain_;
  const Coefficients* coeffs_;
  SimConfig config_;
  bool completely_s_ = true;
};

inline SimOutput simulate_path(const PolyhedralDomain& domain, const Coefficients& coeffs, const SimConfig& config,
                               int path_index = 0) {
  SimOutput out = Simulator(domain, coeffs, config).run(path_index);
  if (!out.failure.empty()) throw LcpRayTermination(out.failure, out.steps_taken + 1);
  return out;
}

struct EnsembleResult {
  std::vector<SimOutput> paths;
  /// (path index, message) for every failed path.
  std::vector<std::pair<int, std::string>> failures;
};

/// Runs config.paths independent paths on `workers` threads. Each path owns
/// its random stream, so the output does not depend on the worker count.
inline EnsembleResult simulate_ensemble(const PolyhedralDomain& domain, const Coefficients& coeffs,
                                        const SimConfig& config, int workers = 1) {
  const Simulator sim(domain, coeffs, config);
  EnsembleResult out;
  out.paths.resize(static_cast<std::size_t>(config.paths));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < config.paths; i = next++) out.paths[static_cast<std::size_t>(i)] = sim.run(i);
  };
  workers = std::max(1, std::min(workers, config.paths));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  for (const SimOutput& p : out.paths) {
    if (!p.failure.empty()) out.failures.emplace_back(p.path_index, p.failure);
  }
  return out;
}

}  // namespace sklab

#endif  // SKLAB_SIMULATE_HPP
