#ifndef SKLAB_TYPES_HPP
#define SKLAB_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sklab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted list of face indices.
using FaceSet = std::vector<int>;

inline std::uint64_t face_mask(const FaceSet& faces) {
  std::uint64_t mask = 0;
  for (int i : faces) mask |= std::uint64_t{1} << i;
  return mask;
}

inline FaceSet faces_of_mask(std::uint64_t mask) {
  FaceSet out;
  for (int i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1U) out.push_back(i);
  }
  return out;
}

}  // namespace sklab

#endif  // SKLAB_TYPES_HPP
