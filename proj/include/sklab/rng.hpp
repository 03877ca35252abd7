#ifndef SKLAB_RNG_HPP
#define SKLAB_RNG_HPP

// Counter-based normal variates. Every draw is a pure function of
// (seed, path, step, slot), so results do not depend on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "sklab/types.hpp"

namespace sklab {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += 0x9E3779B9U;
      key[1] += 0xBB67AE85U;
    }
    return ctr;
  }

 private:
  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53U} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57U} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Standard normals for one simulation path.
class PathNormalStream {
 public:
  PathNormalStream(std::uint64_t seed, std::uint64_t path) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(path + 0x632BE59BD9B4E019ULL));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  /// Fills `out` with the standard normals assigned to `step`.
  void fill(std::uint64_t step, Eigen::Ref<Vector> out) const {
    const auto n = out.size();
    for (Eigen::Index slot = 0; slot < n; slot += 2) {
      const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                    static_cast<std::uint32_t>(slot / 2), 0U};
      const auto r = Philox4x32::generate(ctr, key_);
      const double u1 = to_unit_open(r[0], r[1]);
      const double u2 = to_unit_open(r[2], r[3]);
      const double rad = std::sqrt(-2.0 * std::log(u1));
      const double ang = 2.0 * std::numbers::pi * u2;
      out(slot) = rad * std::cos(ang);
      if (slot + 1 < n) out(slot + 1) = rad * std::sin(ang);
    }
  }

 private:
  // 53-bit uniform on (0, 1].
  static double to_unit_open(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = ((std::uint64_t{a} << 32) | b) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace sklab

#endif  // SKLAB_RNG_HPP
