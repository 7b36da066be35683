#pragma once

#include <cstdint>

#include "hb/types.hpp"

namespace hb {

// Counter-based substream generator (splitmix64 core).  Each sample of each
// shell gets an independent stream keyed by (seed, shell, sample), so results
// do not depend on scheduling or worker count.
class Substream {
 public:
  static Substream keyed(std::uint64_t seed, std::uint64_t shell,
                         std::uint64_t sample) {
    Substream s;
    s.state_ = mix(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^
                       (shell * 0xbf58476d1ce4e5b9ULL)) ^
                   (sample * 0x94d049bb133111ebULL));
    return s;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (-1, 1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  /// Standard normal via Box-Muller (fixed algorithm for reproducibility).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniformly distributed unit direction.
  Vec unit_vector(int n) {
    Vec v(n);
    double norm2 = 0.0;
    do {
      for (int i = 0; i < n; ++i) v[i] = next_gaussian();
      norm2 = v.squaredNorm();
    } while (norm2 < 1e-24);
    return v / std::sqrt(norm2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hb
