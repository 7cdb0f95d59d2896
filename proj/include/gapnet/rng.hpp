#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace gapnet {

// Random numbers.
//
// Every random quantity is drawn from a std::mt19937_64 engine, whose output
// sequence is fixed by the C++ standard. The conversion to reals and bounded
// integers is done here rather than through <random> distributions, whose
// algorithms are implementation-defined, so streams agree across platforms.
//
// Stream splitting: the engine for (seed, stream) is seeded with
// derive_seed(seed, stream) = splitmix64(seed ^ splitmix64(stream + C)).
// Datasets use one stream per instance index, so instance i never depends on
// how many instances were generated before it.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Tags that keep unrelated uses of one user seed on disjoint streams.
namespace stream_tag {
inline constexpr std::uint64_t kInstances = 0x1000;
inline constexpr std::uint64_t kPlacement = 0x2000;
inline constexpr std::uint64_t kSplit = 0x3000;
inline constexpr std::uint64_t kInit = 0x4000;
inline constexpr std::uint64_t kShuffle = 0x5000;
inline constexpr std::uint64_t kSolver = 0x6000;
inline constexpr std::uint64_t kEvaluation = 0x7000;
}  // namespace stream_tag

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

  std::uint64_t next() { return engine_(); }

  // 53 random bits mapped to [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gapnet
