#ifndef SKLAB_GEOMETRY_HPP
#define SKLAB_GEOMETRY_HPP

// Convex polyhedral domains with one constant reflection direction per face.
//
// A domain is the intersection of the half-spaces {x : <n^i, x> >= c_i}.
// Face i pushes along the unit vector d^i, which must point strictly into
// the domain (<n^i, d^i> > 0). At a boundary point x the allowed pushing
// directions form the cone generated by d^i over the active faces I(x), and
// the inward normals form the cone generated by the matching n^i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/lp.hpp"
#include "sklab/nnls.hpp"
#include "sklab/types.hpp"

namespace sklab {

struct Face {
  Vector normal;     // unit inward normal
  double offset;     // face is {x : <normal, x> = offset}
  Vector direction;  // unit reflection direction
};

/// Builds a face from unnormalized input. The half-space is preserved when
/// the normal is rescaled, so the offset is rescaled with it.
inline Face make_face(const Vector& normal, double offset, const Vector& direction) {
  const double nn = normal.norm();
  const double dn = direction.norm();
  if (!(nn > 0.0) || !(dn > 0.0)) throw InvalidDomain("face normal and direction must be nonzero");
  return Face{normal / nn, offset / nn, direction / dn};
}

struct GeometryTolerances {
  double face_rel = 1e-9;   // active band is face_rel * (1 + |x|)
  double lp_strict = 1e-10;  // U requires LP margin above this
  double stratum = 1e-9;     // minimum slack margin for a stratum to exist
};

class PolyhedralDomain {
 public:
  static constexpr int kMaxFaces = 64;

  PolyhedralDomain(int dimension, std::vector<Face> faces, GeometryTolerances tol = {})
      : dim_(dimension), faces_(std::move(faces)), tol_(tol) {
    if (dim_ < 1) throw InvalidDomain("dimension must be positive");
    if (faces_.empty()) throw InvalidDomain("domain needs at least one face");
    if (num_faces() > kMaxFaces) throw InvalidDomain("too many faces");
    normals_.resize(dim_, num_faces());
    directions_.resize(dim_, num_faces());
    offsets_.resize(num_faces());
    for (int i = 0; i < num_faces(); ++i) {
      const Face& f = faces_[i];
      if (f.normal.size() != dim_ || f.direction.size() != dim_) {
        throw InvalidDomain("face " + std::to_string(i) + " has wrong dimension");
      }
      if (std::abs(f.normal.norm() - 1.0) > 1e-12 || std::abs(f.direction.norm() - 1.0) > 1e-12) {
        throw InvalidDomain("face " + std::to_string(i) + " normal/direction not unit length");
      }
      if (!(f.normal.dot(f.direction) > 0.0)) {
        throw InvalidDomain("face " + std::to_string(i) + " direction does not point into the domain");
      }
      normals_.col(i) = f.normal;
      directions_.col(i) = f.direction;
      offsets_(i) = f.offset;
    }
    reflection_ = normals_.transpose() * directions_;

    auto interior = find_stratum_point({});
    if (!interior) throw InvalidDomain("domain has empty interior");
    interior_ = *interior;
    for (int i = 0; i < num_faces(); ++i) {
      if (!find_stratum_point({i})) {
        throw InvalidDomain("face " + std::to_string(i) + " is redundant");
      }
    }
  }

  int dimension() const { return dim_; }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(int i) const { return faces_[i]; }
  const GeometryTolerances& tolerances() const { return tol_; }

  /// Columns are the inward normals n^i.
  const Matrix& normals() const { return normals_; }
  /// Columns are the reflection directions d^i.
  const Matrix& directions() const { return directions_; }
  const Vector& offsets() const { return offsets_; }
  /// Entry (i, j) is <n^i, d^j>; this is the LCP matrix of a pushing step.
  const Matrix& reflection_matrix() const { return reflection_; }
  const Vector& interior_point() const { return interior_; }

  double slack(int i, const Vector& x) const { return normals_.col(i).dot(x) - offsets_(i); }
  Vector slacks(const Vector& x) const { return normals_.transpose() * x - offsets_; }

  double face_tolerance(const Vector& x) const { return tol_.face_rel * (1.0 + x.norm()); }

  /// True if x lies in the closed domain up to the face tolerance.
  bool contains(const Vector& x) const {
    return slacks(x).minCoeff() >= -face_tolerance(x);
  }

  /// Distance from an interior point to the boundary (minimum face slack).
  double distance_to_boundary(const Vector& x) const { return std::max(0.0, slacks(x).minCoeff()); }

  /// Point in the relative interior of {x : slack_i = 0 for i in S,
  /// slack_j > 0 otherwise}, or nothing when that set is empty.
  std::optional<Vector> find_stratum_point(const FaceSet& active) const {
    // Variables: x (free), delta. Maximize delta with slack_j >= delta off S.
    LpProblem lp(dim_ + 1);
    for (int j = 0; j < dim_; ++j) lp.free[j] = true;
    lp.objective(dim_) = 1.0;
    std::vector<bool> in_set(num_faces(), false);
    for (int i : active) in_set[i] = true;
    for (int i = 0; i < num_faces(); ++i) {
      Vector row = Vector::Zero(dim_ + 1);
      row.head(dim_) = normals_.col(i);
      if (in_set[i]) {
        lp.add_eq(row, offsets_(i));
      } else {
        row.head(dim_) *= -1.0;
        row(dim_) = 1.0;
        lp.add_le(row, -offsets_(i));
      }
    }
    Vector cap = Vector::Zero(dim_ + 1);
    cap(dim_) = 1.0;
    lp.add_le(cap, 1.0);
    const LpResult res = solve_lp(lp);
    if (res.status != LpStatus::kOptimal || res.x(dim_) <= tol_.stratum) return std::nullopt;
    return Vector(res.x.head(dim_));
  }

 private:
  int dim_;
  std::vector<Face> faces_;
  GeometryTolerances tol_;
  Matrix normals_;
  Matrix directions_;
  Vector offsets_;
  Matrix reflection_;
  Vector interior_;
};

/// Finitely generated convex cone with vertex at the origin. Generators are
/// the columns; zero columns denote the trivial cone {0}.
struct ConeDescription {
  Matrix generators;

  int size() const { return static_cast<int>(generators.cols()); }
  bool trivial() const { return generators.cols() == 0; }
};

inline FaceSet active_faces(const PolyhedralDomain& domain, const Vector& x) {
  if (x.size() != domain.dimension()) throw InvalidArgument("point has wrong dimension");
  const double eps = domain.face_tolerance(x);
  FaceSet out;
  for (int i = 0; i < domain.num_faces(); ++i) {
    const double s = domain.slack(i, x);
    if (s < -eps) {
      std::ostringstream msg;
      msg << "point violates face " << i << " by " << -s;
      throw PointOutsideDomain(msg.str());
    }
    if (s <= eps) out.push_back(i);
  }
  return out;
}

inline ConeDescription cone_of_columns(const Matrix& columns, const FaceSet& faces) {
  ConeDescription cone{Matrix(columns.rows(), static_cast<Eigen::Index>(faces.size()))};
  for (std::size_t k = 0; k < faces.size(); ++k) cone.generators.col(static_cast<Eigen::Index>(k)) = columns.col(faces[k]);
  return cone;
}

inline ConeDescription direction_cone(const PolyhedralDomain& domain, const Vector& x) {
  return cone_of_columns(domain.directions(), active_faces(domain, x));
}

inline ConeDescription normal_cone(const PolyhedralDomain& domain, const Vector& x) {
  return cone_of_columns(domain.normals(), active_faces(domain, x));
}

enum class BoundaryClass { kInterior, kU, kV };

inline const char* to_string(BoundaryClass c) {
  switch (c) {
    case BoundaryClass::kInterior:
      return "interior";
    case BoundaryClass::kU:
      return "U";
    case BoundaryClass::kV:
      return "V";
  }
  return "?";
}

struct FaceSetClassification {
  BoundaryClass cls = BoundaryClass::kInterior;
  /// max over unit-weight normals n of min_j <n, d^j>.
  double margin = 0.0;
  /// Optimal convex weights on the active normals.
  Vector normal_weights;
};

/// U/V verdict for boundary points whose active set is exactly `faces`.
///
/// Solves  max t  s.t.  n = sum s_i n^i,  s >= 0,  sum s_i = 1,
///                      <n, d^j> >= t  for every active j.
/// The point is in U iff t* exceeds the strict tolerance. Checking the
/// generators d^j is enough because d(x) is finitely generated.
inline FaceSetClassification classify_face_set(const PolyhedralDomain& domain, const FaceSet& faces) {
  FaceSetClassification out;
  const int k = static_cast<int>(faces.size());
  if (k == 0) return out;
  const Matrix& r = domain.reflection_matrix();
  LpProblem lp(k + 1);
  lp.free[k] = true;
  lp.objective(k) = 1.0;
  Vector simplex = Vector::Zero(k + 1);
  simplex.head(k).setOnes();
  lp.add_eq(simplex, 1.0);
  for (int jj = 0; jj < k; ++jj) {
    Vector row = Vector::Zero(k + 1);
    for (int ii = 0; ii < k; ++ii) row(ii) = -r(faces[ii], faces[jj]);
    row(k) = 1.0;
    lp.add_le(row, 0.0);
  }
  const LpResult res = solve_lp(lp);
  if (res.status != LpStatus::kOptimal) {
    throw LpNumericalFailure("classification LP did not reach an optimum");
  }
  out.margin = res.x(k);
  out.normal_weights = res.x.head(k);
  out.cls = out.margin > domain.tolerances().lp_strict ? BoundaryClass::kU : BoundaryClass::kV;
  return out;
}

inline BoundaryClass classify_boundary_point(const PolyhedralDomain& domain, const Vector& x) {
  return classify_face_set(domain, active_faces(domain, x)).cls;
}

struct Stratum {
  FaceSet faces;
  Vector point;
  BoundaryClass cls = BoundaryClass::kU;
  double margin = 0.0;
};

struct CompletelySResult {
  bool completely_s = true;
  std::vector<Stratum> strata;
  /// Smallest stratum classified V (empty when completely_s).
  FaceSet witness;
};

inline std::string format_face_set(const FaceSet& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(s[k]);
  }
  return out + "}";
}

/// Enumerates every nonempty boundary stratum, ordered by size and then
/// lexicographically, and classifies a representative point of each.
inline CompletelySResult is_completely_s(const PolyhedralDomain& domain) {
  constexpr int kMaxStrataFaces = 16;
  const int m = domain.num_faces();
  if (m > kMaxStrataFaces) {
    throw InvalidArgument("stratum enumeration supports at most 16 faces, domain has " + std::to_string(m));
  }
  std::vector<std::uint64_t> masks;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) masks.push_back(mask);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
    const int pa = __builtin_popcountll(a);
    const int pb = __builtin_popcountll(b);
    if (pa != pb) return pa < pb;
    return faces_of_mask(a) < faces_of_mask(b);
  });

  CompletelySResult out;
  for (std::uint64_t mask : masks) {
    const FaceSet faces = faces_of_mask(mask);
    try {
      auto point = domain.find_stratum_point(faces);
      if (!point) continue;
      Stratum st;
      st.faces = faces;
      st.point = *point;
      const auto cls = classify_face_set(domain, active_faces(domain, st.point));
      st.cls = cls.cls;
      st.margin = cls.margin;
      if (st.cls == BoundaryClass::kV && out.completely_s) {
        out.completely_s = false;
        out.witness = faces;
      }
      out.strata.push_back(std::move(st));
    } catch (const LpNumericalFailure& e) {
      throw LpNumericalFailure(std::string(e.what()) + " (stratum " + format_face_set(faces) + ")");
    }
  }
  return out;
}

/// Metric projection of y onto the cone, via nonnegative least squares over
/// the generator weights.
inline Vector project_to_cone(const ConeDescription& cone, const Vector& y) {
  if (cone.trivial()) return Vector::Zero(y.size());
  const Vector weights = nnls(cone.generators, y);
  return cone.generators * weights;
}

inline bool cone_membership(const ConeDescription& cone, const Vector& y, double tol) {
  if (tol < 0.0) throw InvalidArgument("tolerance must be nonnegative");
  return (project_to_cone(cone, y) - y).norm() <= tol;
}

}  // namespace sklab

#endif  // SKLAB_GEOMETRY_HPP
