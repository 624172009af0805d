#pragma once

#include <cstdint>
#include <limits>

namespace issp {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output of stream s under seed k is a pure
/// function of (k, s, i). Trajectory i of a batch always reads stream i, so a
/// batch is reproducible no matter how trajectories are scheduled.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^
                   (stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derives a child seed, used to give independent sub-experiments their own
/// stream families from one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag + 0xA0761D6478BD642FULL));
}

}  // namespace issp
