#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace glds {

// SplitMix64 finalizer; used as a mixer when deriving substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and any number of
// indices (dimension, trial, grid position, ...). Each work item in a sweep
// owns its stream, so results do not depend on execution order.
template <typename... Ix>
std::uint64_t derive_stream(std::uint64_t seed, Ix... index) {
  std::uint64_t s = mix64(seed);
  ((s = mix64(s ^ mix64(static_cast<std::uint64_t>(index)))), ...);
  return s;
}

// Seedable generator with an explicit Box-Muller normal so draws are pinned by
// this code, not by the standard library's unspecified distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1].
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (1.0 - uniform01());
  }

  // Standard normal via Box-Muller; caches the second value of each pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // +1 or -1 with equal probability.
  double rademacher() { return (gen_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace glds
