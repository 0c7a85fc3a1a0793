#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace quarc {

/// SplitMix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Purpose tags for sub-streams. Values are part of the reproducibility
/// contract: changing them changes every seeded result.
enum class Stream : std::uint64_t {
  kTopology = 1,
  kRequests = 2,
  kAssignment = 3,
  kLinks = 4,
  kFusions = 5,
  kPartition = 6,
  kCalibration = 7,
  kTest = 99,
};

/// Derives a seed from a master seed and a sequence of keys, e.g.
/// (purpose, slot, request id).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(master);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Seeded random stream. Distribution code is written out here rather than
/// using <random> distributions so draws are identical across standard
/// library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
      : engine_(derive_seed(master, keys)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// True with probability p; p <= 0 never, p >= 1 always.
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + x % range;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace quarc
