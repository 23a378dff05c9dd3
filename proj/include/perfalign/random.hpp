#pragma once

// Portable counter-based random numbers.
//
// Each value is mix64(key + counter * golden), i.e. the SplitMix64 sequence
// for `key`, so the i-th draw of a stream is a pure function of (key, i) and
// identical on every platform. Independent matrices use independent streams:
// key = derive_seed(world_seed, stream_id). Gaussian draws use Box-Muller on
// top of this generator rather than std::normal_distribution, whose algorithm
// is implementation-defined.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace perfalign {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Substream identifiers. Values are part of the on-disk reproducibility
// contract; do not renumber.
enum class Stream : std::uint64_t {
  kLatents = 1,
  kTransform1 = 2,
  kTransform2 = 3,
  kNoise1 = 4,
  kNoise2 = 5,
  kContrastiveInit = 6,
  kHoldoutSplit = 7,
  kCandidates = 8,
};

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) noexcept {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  result_type operator()() noexcept { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_open_closed() noexcept { return 1.0 - uniform(); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t r;
    do {
      r = (*this)();
    } while (r >= limit);
    return r % bound;
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open_closed();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace perfalign
