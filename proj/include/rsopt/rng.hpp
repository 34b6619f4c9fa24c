#pragma once

// Counter-based random number generator with per-(seed, path, step)
// substreams.  Every draw is a pure function of (key, counter), so Monte
// Carlo runs are reproducible bit-exactly regardless of thread count or
// evaluation order across paths.

#include <cstdint>
#include <cmath>

#include "rsopt/types.hpp"

namespace rsopt {

class CounterRng {
 public:
  // Substream for path `path` under a user seed; `step` fast-forwards the
  // counter so the stream continues as if `step` draws had been consumed.
  CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t step = 0) {
    std::uint64_t k = mix(seed + kGolden);
    k = mix(k ^ (path + kGolden));
    key_ = k;
    counter_ = step;
  }

  explicit CounterRng(std::uint64_t seed) : CounterRng(seed, 0, 0) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

  template <typename Derived>
  void gaussian_fill(Eigen::MatrixBase<Derived>& out, double scale) {
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) = scale * gaussian();
  }

  // Unbiased uniform integer in [0, n) (Lemire's multiply-shift with
  // rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform point in the radius-`delta` ball: gaussian direction scaled by
  // delta * U^{1/d}.
  template <typename Derived>
  void ball_fill(Eigen::MatrixBase<Derived>& out, double delta) {
    const auto d = out.size();
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      out(i) = gaussian();
      norm2 += out(i) * out(i);
    }
    const double norm = std::sqrt(norm2);
    const double radius =
        delta * std::pow(uniform01(), 1.0 / static_cast<double>(d));
    const double s = norm > 0.0 ? radius / norm : 0.0;
    for (Eigen::Index i = 0; i < d; ++i) out(i) *= s;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rsopt
