#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace apt {

/// Counter-based random stream.
///
/// A stream is addressed by (seed, stream id, counter); two streams with the
/// same address produce the same sequence regardless of which thread creates
/// them or in which order. The engine derives one stream per chain and
/// iteration, so results never depend on worker scheduling.
///
/// The generator is SplitMix64 started from a hash of the address. It
/// satisfies UniformRandomBitGenerator, so standard distributions work on it.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(*this); }
  void fill_normal(std::span<double> out);

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream-id namespaces used by the engine.
namespace streams {
inline constexpr std::uint64_t kInit = 1ULL << 40;
inline constexpr std::uint64_t kExplore = 2ULL << 40;
inline constexpr std::uint64_t kSwap = 3ULL << 40;
inline constexpr std::uint64_t kTarget = 4ULL << 40;
inline constexpr std::uint64_t kSubsample = 5ULL << 40;
inline constexpr std::uint64_t kFit = 6ULL << 40;
inline constexpr std::uint64_t kSynthetic = 7ULL << 40;
}  // namespace streams

}  // namespace apt
