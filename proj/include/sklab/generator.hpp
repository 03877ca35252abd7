#ifndef SKLAB_GENERATOR_HPP
#define SKLAB_GENERATOR_HPP

// Drift/dispersion coefficients, the second-order operator
//   L f = sum_i b_i d_i f + 1/2 sum_ij a_ij d_ij f,   a = sigma sigma^T,
// and admissible test functions: nonnegative derivative along every
// reflection direction on the boundary, constant near the V set.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/geometry.hpp"
#include "sklab/types.hpp"

namespace sklab {

struct Coefficients {
  using DriftFn = std::function<void(const Vector& x, Vector& out)>;
  using DispersionFn = std::function<void(const Vector& x, Matrix& out)>;

  std::string name;
  int dimension = 0;
  DriftFn drift;
  DispersionFn dispersion;
  double ellipticity_floor = 0.0;

  Vector drift_at(const Vector& x) const {
    Vector b(dimension);
    drift(x, b);
    return b;
  }

  Matrix dispersion_at(const Vector& x) const {
    Matrix s(dimension, dimension);
    dispersion(x, s);
    return s;
  }

  Matrix diffusion_at(const Vector& x) const {
    const Matrix s = dispersion_at(x);
    return s * s.transpose();
  }
};

inline Coefficients constant_coefficients(const Vector& b, const Matrix& sigma, double ellipticity_floor = 0.0) {
  if (sigma.rows() != b.size() || sigma.cols() != b.size()) throw InvalidArgument("sigma must be J x J");
  Coefficients c;
  c.name = "constant";
  c.dimension = static_cast<int>(b.size());
  c.drift = [b](const Vector&, Vector& out) { out = b; };
  c.dispersion = [sigma](const Vector&, Matrix& out) { out = sigma; };
  c.ellipticity_floor = ellipticity_floor;
  return c;
}

/// Linear mean-reverting drift b(x) = -B x with constant dispersion.
inline Coefficients ou_coefficients(const Matrix& b_matrix, const Matrix& sigma, double ellipticity_floor = 0.0) {
  if (b_matrix.rows() != b_matrix.cols() || sigma.rows() != b_matrix.rows() || sigma.cols() != b_matrix.rows()) {
    throw InvalidArgument("ou coefficients need square matrices of matching size");
  }
  Coefficients c;
  c.name = "ou";
  c.dimension = static_cast<int>(b_matrix.rows());
  c.drift = [b_matrix](const Vector& x, Vector& out) { out.noalias() = -b_matrix * x; };
  c.dispersion = [sigma](const Vector&, Matrix& out) { out = sigma; };
  c.ellipticity_floor = ellipticity_floor;
  return c;
}

/// Constant drift, diagonal dispersion sigma_ii(x) = base_i + slope_i * x_i.
inline Coefficients state_diag_coefficients(const Vector& b, const Vector& base, const Vector& slope,
                                            double ellipticity_floor = 0.0) {
  if (base.size() != b.size() || slope.size() != b.size()) throw InvalidArgument("state-diag sizes differ");
  Coefficients c;
  c.name = "state-diag";
  c.dimension = static_cast<int>(b.size());
  c.drift = [b](const Vector&, Vector& out) { out = b; };
  c.dispersion = [base, slope](const Vector& x, Matrix& out) {
    out.setZero(base.size(), base.size());
    out.diagonal() = base + slope.cwiseProduct(x);
  };
  c.ellipticity_floor = ellipticity_floor;
  return c;
}

/// Smallest observed ratio v^T a(x) v / |v|^2 over random points of the box
/// [lo, hi]^J and random directions. Spot check only.
inline double ellipticity_spot_check(const Coefficients& c, double lo, double hi, int samples = 1000,
                                     std::uint64_t seed = 7) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> box(lo, hi);
  std::normal_distribution<double> normal;
  double worst = std::numeric_limits<double>::infinity();
  Vector x(c.dimension), v(c.dimension);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < c.dimension; ++i) {
      x(i) = box(gen);
      v(i) = normal(gen);
    }
    const Matrix a = c.diffusion_at(x);
    worst = std::min(worst, v.dot(a * v) / v.squaredNorm());
  }
  return worst;
}

struct TestFunction {
  std::string id;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  double support_radius = std::numeric_limits<double>::infinity();
  /// Center of the support ball when the support is bounded.
  Vector center;
  bool constant_near_v = false;
  /// Radius of the ball around `center` on which the function is constant.
  double plateau_radius = 0.0;
};

inline double apply_generator(const Coefficients& c, const TestFunction& f, const Vector& x) {
  const Vector b = c.drift_at(x);
  const Matrix a = c.diffusion_at(x);
  return b.dot(f.gradient(x)) + 0.5 * (a.cwiseProduct(f.hessian(x))).sum();
}

inline TestFunction constant_test_fn(int dimension, double value) {
  TestFunction f;
  f.id = "constant";
  f.value = [value](const Vector&) { return value; };
  f.gradient = [dimension](const Vector&) { return Vector::Zero(dimension); };
  f.hessian = [dimension](const Vector&) { return Matrix::Zero(dimension, dimension); };
  f.constant_near_v = true;
  return f;
}

/// f(x) = <v, x>; admissible only if <v, d^i> >= 0 on every face.
inline TestFunction make_linear_test_fn(const PolyhedralDomain& domain, const Vector& v) {
  if (v.size() != domain.dimension()) throw InvalidArgument("linear test function has wrong dimension");
  FaceSet bad;
  for (int i = 0; i < domain.num_faces(); ++i) {
    if (v.dot(domain.face(i).direction) < 0.0) bad.push_back(i);
  }
  if (!bad.empty()) {
    throw ObliqueSignViolation("linear test function decreases along directions of faces " + format_face_set(bad));
  }
  const int j = domain.dimension();
  TestFunction f;
  f.id = "linear";
  f.value = [v](const Vector& x) { return v.dot(x); };
  f.gradient = [v](const Vector&) { return v; };
  f.hessian = [j](const Vector&) { return Matrix::Zero(j, j); };
  return f;
}

/// Linear function without the admissibility check, for negative controls.
inline TestFunction make_unchecked_linear_test_fn(const Vector& v) {
  const auto j = v.size();
  TestFunction f;
  f.id = "linear-unchecked";
  f.value = [v](const Vector& x) { return v.dot(x); };
  f.gradient = [v](const Vector&) { return v; };
  f.hessian = [j](const Vector&) { return Matrix::Zero(j, j); };
  return f;
}

inline TestFunction scale(TestFunction f, double alpha) {
  TestFunction out = f;
  out.id = std::to_string(alpha) + "*" + f.id;
  out.value = [f, alpha](const Vector& x) { return alpha * f.value(x); };
  out.gradient = [f, alpha](const Vector& x) { return Vector(alpha * f.gradient(x)); };
  out.hessian = [f, alpha](const Vector& x) { return Matrix(alpha * f.hessian(x)); };
  return out;
}

inline TestFunction sum(const TestFunction& f, const TestFunction& g) {
  TestFunction out;
  out.id = f.id + "+" + g.id;
  out.value = [f, g](const Vector& x) { return f.value(x) + g.value(x); };
  out.gradient = [f, g](const Vector& x) { return Vector(f.gradient(x) + g.gradient(x)); };
  out.hessian = [f, g](const Vector& x) { return Matrix(f.hessian(x) + g.hessian(x)); };
  out.constant_near_v = f.constant_near_v && g.constant_near_v;
  if (std::isfinite(f.support_radius) && std::isfinite(g.support_radius)) {
    // Ball around f's center containing both supports.
    out.center = f.center;
    out.support_radius = std::max(f.support_radius, (g.center - f.center).norm() + g.support_radius);
  }
  return out;
}

namespace detail {

// C2 step: 1 on (-inf, 0], 0 on [1, inf), quintic smoothstep in between.
struct QuinticStep {
  static double value(double v) {
    if (v <= 0.0) return 1.0;
    if (v >= 1.0) return 0.0;
    return 1.0 - v * v * v * (10.0 - 15.0 * v + 6.0 * v * v);
  }
  static double d1(double v) {
    if (v <= 0.0 || v >= 1.0) return 0.0;
    return -30.0 * v * v * (1.0 - v) * (1.0 - v);
  }
  static double d2(double v) {
    if (v <= 0.0 || v >= 1.0) return 0.0;
    return -60.0 * v * (1.0 - v) * (1.0 - 2.0 * v);
  }
};

// f(x) = h((g(x)/r^2 - u0) / (1 - u0)),  g(x) = |x - c|^2 + beta <n, x - c>.
inline TestFunction tilted_bump(const Vector& center, double radius, const Vector& tilt, double beta, double u0,
                                double sign) {
  const double r2 = radius * radius;
  const double span = 1.0 - u0;
  auto g_of = [=](const Vector& x) { return (x - center).squaredNorm() + beta * tilt.dot(x - center); };
  auto v_of = [=](const Vector& x) { return (g_of(x) / r2 - u0) / span; };
  auto grad_g = [=](const Vector& x) { return Vector(2.0 * (x - center) + beta * tilt); };
  TestFunction f;
  f.value = [=](const Vector& x) { return sign * QuinticStep::value(v_of(x)); };
  f.gradient = [=](const Vector& x) {
    return Vector(sign * QuinticStep::d1(v_of(x)) / (r2 * span) * grad_g(x));
  };
  f.hessian = [=](const Vector& x) {
    const double v = v_of(x);
    const Vector gg = grad_g(x);
    const auto j = x.size();
    Matrix h = QuinticStep::d2(v) / (r2 * r2 * span * span) * (gg * gg.transpose());
    h += QuinticStep::d1(v) / (r2 * span) * 2.0 * Matrix::Identity(j, j);
    return Matrix(sign * h);
  };
  f.center = center;
  f.support_radius = radius;
  return f;
}

}  // namespace detail

/// Fraction of the squared support radius on which bumps are flat.
inline constexpr double kBumpPlateauFraction = 0.5;

/// Boundary bump: equals 1 near `center`, vanishes outside B_radius(center),
/// and never increases along a reflection direction on the boundary, so the
/// sign = -1 version is an admissible test function.
///
/// Built as h(g(x)) with g(x) = |x - c|^2 + beta <n, x - c>, where n is a
/// unit inward normal at c with <n, d^j> >= t* > 0 for the active faces and
/// beta = 2 radius / t*. On the closed domain <n, x - c> >= 0, so g is
/// nonnegative and grows along every active d^j inside the ball.
inline TestFunction make_bump_test_fn(const PolyhedralDomain& domain, const Vector& center, double radius,
                                      int sign) {
  if (sign != 1 && sign != -1) throw InvalidArgument("bump sign must be +1 or -1");
  if (!(radius > 0.0)) throw InvalidArgument("bump radius must be positive");
  const FaceSet active = active_faces(domain, center);
  if (active.empty()) throw CenterNotOnBoundary("bump center must lie on the boundary");
  const auto cls = classify_face_set(domain, active);
  if (cls.cls != BoundaryClass::kU) throw CenterInV("bump center lies in V");

  // Every other face must stay outside the ball.
  for (int i = 0; i < domain.num_faces(); ++i) {
    if (std::find(active.begin(), active.end(), i) != active.end()) continue;
    if (domain.slack(i, center) <= radius) {
      throw RadiusTooLarge("bump support reaches face " + std::to_string(i));
    }
  }
  // Strata touching the center have active sets inside `active`; any of
  // them in V sits at distance zero. Unrealized subsets are rejected too,
  // which is conservative.
  const std::uint64_t full = face_mask(active);
  for (std::uint64_t sub = (full - 1) & full; sub != 0; sub = (sub - 1) & full) {
    const FaceSet faces = faces_of_mask(sub);
    if (classify_face_set(domain, faces).cls != BoundaryClass::kU) {
      throw RadiusTooLarge("bump support meets V stratum " + format_face_set(faces));
    }
  }

  Vector n = Vector::Zero(domain.dimension());
  for (std::size_t k = 0; k < active.size(); ++k) n += cls.normal_weights(static_cast<Eigen::Index>(k)) * domain.face(active[k]).normal;
  n.normalize();
  double t_star = std::numeric_limits<double>::infinity();
  for (int i : active) t_star = std::min(t_star, n.dot(domain.face(i).direction));
  const double beta = 2.0 * radius / t_star;

  TestFunction f = detail::tilted_bump(center, radius, n, beta, kBumpPlateauFraction, static_cast<double>(sign));
  f.id = std::string(sign < 0 ? "-" : "+") + "bump";
  f.constant_near_v = true;
  // Plateau holds where rho^2 + beta rho <= u0 radius^2.
  f.plateau_radius = 0.5 * (-beta + std::sqrt(beta * beta + 4.0 * kBumpPlateauFraction * radius * radius));
  return f;
}

/// Radial bump supported strictly inside the domain.
inline TestFunction make_interior_bump_test_fn(const PolyhedralDomain& domain, const Vector& center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("bump radius must be positive");
  if (domain.slacks(center).minCoeff() <= radius) throw RadiusTooLarge("interior bump support reaches the boundary");
  TestFunction f = detail::tilted_bump(center, radius, Vector::Zero(center.size()), 0.0, kBumpPlateauFraction, 1.0);
  f.id = "interior-bump";
  f.constant_near_v = true;
  f.plateau_radius = std::sqrt(kBumpPlateauFraction) * radius;
  return f;
}

struct AdmissibilityReport {
  bool admissible = true;
  FaceSet violating_faces;
  double worst = 0.0;  // most negative <d^i, grad f> seen
  bool constant_near_v_required = false;
};

/// Samples boundary points on every face (inside the support when bounded)
/// and checks <d^i, grad f> >= -tol there. When the domain has a nonempty V
/// set the function must also be flagged constant near V.
inline AdmissibilityReport check_admissible(const PolyhedralDomain& domain, const TestFunction& f, bool v_nonempty,
                                            int samples_per_face = 1000, double tol = 1e-9,
                                            std::uint64_t seed = 11) {
  AdmissibilityReport rep;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int j = domain.dimension();
  for (int i = 0; i < domain.num_faces(); ++i) {
    const Vector& n = domain.face(i).normal;
    const Vector& d = domain.face(i).direction;
    Vector base;
    double spread;
    if (std::isfinite(f.support_radius)) {
      base = f.center;
      spread = f.support_radius;
    } else {
      base = *domain.find_stratum_point({i});
      spread = 10.0;
    }
    // Project the base point onto the face plane.
    base -= (n.dot(base) - domain.face(i).offset) * n;
    int accepted = 0;
    for (int attempt = 0; attempt < 20 * samples_per_face && accepted < samples_per_face; ++attempt) {
      Vector dir(j);
      for (int k = 0; k < j; ++k) dir(k) = normal(gen);
      dir -= dir.dot(n) * n;
      const double len = dir.norm();
      Vector x = base;
      if (len > 0.0) x += dir / len * spread * std::pow(unit(gen), 1.0 / std::max(1, j - 1));
      if (!domain.contains(x)) continue;
      ++accepted;
      const double dd = d.dot(f.gradient(x));
      rep.worst = std::min(rep.worst, dd);
      if (dd < -tol) {
        if (rep.violating_faces.empty() || rep.violating_faces.back() != i) rep.violating_faces.push_back(i);
        rep.admissible = false;
      }
    }
  }
  if (v_nonempty && !f.constant_near_v) {
    rep.admissible = false;
    rep.constant_near_v_required = true;
  }
  return rep;
}

}  // namespace sklab

#endif  // SKLAB_GENERATOR_HPP
