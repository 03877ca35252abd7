#ifndef SKLAB_SKOROKHOD_HPP
#define SKLAB_SKOROKHOD_HPP

// Pathwise Skorokhod problem on a time grid.
//
// Each step solves the pushing problem  z = y + D l,  slack(z) >= 0,
// l >= 0,  l_i * slack_i(z) = 0  as a linear complementarity problem in
// face-slack coordinates, w = slack(y) + R l with R_ij = <n^i, d^j>.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/geometry.hpp"
#include "sklab/lcp.hpp"
#include "sklab/types.hpp"

namespace sklab {

/// Vector-valued path on a strictly increasing time grid. Column k of
/// `values` is the value at times[k].
struct DiscretePath {
  std::vector<double> times;
  Matrix values;

  DiscretePath() = default;
  DiscretePath(std::vector<double> t, Matrix v) : times(std::move(t)), values(std::move(v)) { validate(); }

  int dimension() const { return static_cast<int>(values.rows()); }
  int size() const { return static_cast<int>(times.size()); }
  Vector point(int k) const { return values.col(k); }

  void validate() const {
    if (static_cast<Eigen::Index>(times.size()) != values.cols()) {
      throw GridMismatch("path has " + std::to_string(times.size()) + " times but " +
                         std::to_string(values.cols()) + " values");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (!(times[k] > times[k - 1])) throw GridMismatch("path times must be strictly increasing");
    }
  }
};

struct EspSolution {
  DiscretePath constrained;  // phi
  DiscretePath pushing;      // eta, eta(0) = 0
  /// Column k holds the per-face weights l^i_k of step k (column 0 is zero).
  Matrix local_time_increments;
  /// Lemke pivots used at each step (0 for steps that needed no pushing).
  std::vector<int> lcp_pivots;
};

/// Exact running-minimum solution on [0, inf) with direction +1.
inline EspSolution solve_sp_1d(const DiscretePath& psi) {
  if (psi.dimension() != 1) throw InvalidArgument("solve_sp_1d needs a scalar path");
  if (psi.size() == 0) throw InvalidArgument("empty path");
  if (psi.values(0, 0) < 0.0) throw BadInitialPoint("psi(0) must be nonnegative");
  const int n = psi.size();
  Matrix phi(1, n), eta(1, n), lt = Matrix::Zero(1, n);
  double running = 0.0;
  for (int k = 0; k < n; ++k) {
    const double prev = running;
    running = std::max(running, -psi.values(0, k));
    eta(0, k) = running;
    phi(0, k) = psi.values(0, k) + running;
    lt(0, k) = running - prev;
  }
  EspSolution out;
  out.constrained = DiscretePath(psi.times, phi);
  out.pushing = DiscretePath(psi.times, eta);
  out.local_time_increments = lt;
  out.lcp_pivots.assign(n, 0);
  return out;
}

enum class StepStatus { kOk, kRayTermination };

struct StepResult {
  StepStatus status = StepStatus::kOk;
  Vector z;
  /// One weight per face of the domain.
  Vector local_times;
  int pivots = 0;
};

struct StepperOptions {
  double comp_tol = 1e-10;
  /// Reject domains that are not completely-S at construction.
  bool require_completely_s = true;
};

/// Reusable per-step pushing solver. Holds scratch buffers, so one instance
/// per thread.
class SkorokhodStepper {
 public:
  explicit SkorokhodStepper(const PolyhedralDomain& domain, StepperOptions opts = {})
      : domain_(&domain), opts_(opts) {
    if (opts_.require_completely_s) {
      const auto cs = is_completely_s(domain);
      if (!cs.completely_s) {
        throw NonCompletelyS("reflection data is not completely-S; failing stratum " +
                             format_face_set(cs.witness));
      }
    }
    const int m = domain.num_faces();
    slack_.resize(m);
    candidate_.reserve(m);
  }

  const PolyhedralDomain& domain() const { return *domain_; }

  /// Pushes x + increment back into the closed domain.
  StepResult step(const Vector& x, const Vector& increment) {
    StepResult out;
    step_into(x, increment, out);
    return out;
  }

  /// Allocation-free variant for the simulation hot loop.
  void step_into(const Vector& x, const Vector& increment, StepResult& out) {
    const PolyhedralDomain& dom = *domain_;
    const int m = dom.num_faces();
    out.status = StepStatus::kOk;
    out.pivots = 0;
    out.z.resize(x.size());
    out.z.noalias() = x + increment;
    out.local_times.setZero(m);
    slack_.noalias() = dom.normals().transpose() * out.z;
    slack_ -= dom.offsets();
    if (slack_.minCoeff() >= 0.0) return;

    // Faces near x enter the LCP; more are added if the pushed point still
    // violates a face outside the candidate set.
    const double radius = increment.norm() + dom.face_tolerance(x);
    candidate_.clear();
    for (int i = 0; i < m; ++i) {
      if (dom.slack(i, x) <= radius || slack_(i) < 0.0) candidate_.push_back(i);
    }
    const Vector y = out.z;
    const Vector q_all = slack_;
    for (int round = 0; round <= m; ++round) {
      const int k = static_cast<int>(candidate_.size());
      Matrix mat(k, k);
      Vector q(k);
      for (int a = 0; a < k; ++a) {
        q(a) = q_all(candidate_[a]);
        for (int b = 0; b < k; ++b) mat(a, b) = dom.reflection_matrix()(candidate_[a], candidate_[b]);
      }
      const LcpResult lcp = lemke_.solve(mat, q);
      out.pivots += lcp.pivots;
      if (lcp.status != LcpStatus::kSolved) {
        out.status = StepStatus::kRayTermination;
        out.z = y;
        out.local_times.setZero(m);
        return;
      }
      out.local_times.setZero(m);
      out.z = y;
      for (int a = 0; a < k; ++a) {
        const double l = lcp.z(a);
        if (l > 0.0) {
          out.local_times(candidate_[a]) = l;
          out.z += l * dom.directions().col(candidate_[a]);
        }
      }
      slack_.noalias() = dom.normals().transpose() * out.z;
      slack_ -= dom.offsets();
      const double eps = dom.face_tolerance(out.z);
      bool grew = false;
      for (int i = 0; i < m; ++i) {
        if (slack_(i) < -eps && std::find(candidate_.begin(), candidate_.end(), i) == candidate_.end()) {
          candidate_.push_back(i);
          grew = true;
        }
      }
      if (!grew) return;
      std::sort(candidate_.begin(), candidate_.end());
    }
    out.status = StepStatus::kRayTermination;
  }

 private:
  const PolyhedralDomain* domain_;
  StepperOptions opts_;
  LemkeSolver lemke_;
  Vector slack_;
  FaceSet candidate_;
};

/// Single pushing step; throws on ray termination.
inline StepResult solve_sp_step(const PolyhedralDomain& domain, const Vector& x, const Vector& increment,
                                StepperOptions opts = {}) {
  if (!domain.contains(x)) throw PointOutsideDomain("step start point outside the domain");
  SkorokhodStepper stepper(domain, opts);
  StepResult r = stepper.step(x, increment);
  if (r.status == StepStatus::kRayTermination) {
    throw LcpRayTermination("pushing step could not be constrained (ray termination)", -1);
  }
  return r;
}

/// Chains pushing steps over the increments of psi.
inline EspSolution solve_sp_path(const PolyhedralDomain& domain, const DiscretePath& psi, StepperOptions opts = {}) {
  psi.validate();
  if (psi.dimension() != domain.dimension()) throw InvalidArgument("path dimension does not match domain");
  if (psi.size() == 0) throw InvalidArgument("empty path");
  const Vector x0 = psi.point(0);
  if (!domain.contains(x0)) throw PointOutsideDomain("psi(0) lies outside the domain");

  SkorokhodStepper stepper(domain, opts);
  const int n = psi.size();
  const int j = domain.dimension();
  Matrix phi(j, n), eta(j, n);
  Matrix lt = Matrix::Zero(domain.num_faces(), n);
  std::vector<int> pivots(n, 0);
  phi.col(0) = x0;
  eta.col(0).setZero();
  StepResult r;
  for (int k = 1; k < n; ++k) {
    const Vector x = phi.col(k - 1);
    const Vector inc = psi.values.col(k) - psi.values.col(k - 1);
    stepper.step_into(x, inc, r);
    if (r.status == StepStatus::kRayTermination) {
      throw LcpRayTermination("ray termination at step " + std::to_string(k), k);
    }
    phi.col(k) = r.z;
    eta.col(k) = eta.col(k - 1) + domain.directions() * r.local_times;
    lt.col(k) = r.local_times;
    pivots[k] = r.pivots;
  }
  EspSolution out;
  out.constrained = DiscretePath(psi.times, std::move(phi));
  out.pushing = DiscretePath(psi.times, std::move(eta));
  out.local_time_increments = std::move(lt);
  out.lcp_pivots = std::move(pivots);
  return out;
}

/// Faces whose hyperplane contains x within the face tolerance. Unlike
/// active_faces this never throws: points outside the domain simply do not
/// sit on the faces they violate.
inline FaceSet touching_faces(const PolyhedralDomain& domain, const Vector& x) {
  const double eps = domain.face_tolerance(x);
  FaceSet out;
  for (int i = 0; i < domain.num_faces(); ++i) {
    if (std::abs(domain.slack(i, x)) <= eps) out.push_back(i);
  }
  return out;
}

/// Checks that eta(t) - eta(s) lies in the cone generated by the directions
/// of every face touched by phi on the window [s, t].
inline bool verify_hull_property(const PolyhedralDomain& domain, const DiscretePath& phi, const DiscretePath& eta,
                                 std::pair<int, int> window, double tol) {
  if (phi.times != eta.times) throw GridMismatch("phi and eta must share a time grid");
  const auto [s, t] = window;
  if (!(s < t) || s < 0 || t >= phi.size()) throw InvalidArgument("window must satisfy 0 <= s < t < N");
  std::uint64_t mask = 0;
  for (int k = s; k <= t; ++k) mask |= face_mask(touching_faces(domain, phi.point(k)));
  const ConeDescription cone = cone_of_columns(domain.directions(), faces_of_mask(mask));
  const Vector delta = eta.point(t) - eta.point(s);
  return cone_membership(cone, delta, tol);
}

}  // namespace sklab

#endif  // SKLAB_SKOROKHOD_HPP
