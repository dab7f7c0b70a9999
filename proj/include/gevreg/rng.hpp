#pragma once

#include <cstdint>
#include <limits>

namespace gevreg {

// Counter-based 64-bit generator. Output i of stream (seed, stream) is
//
//   mix64(key + (i + 1) * 0x9E3779B97F4A7C15),  key = mix64(mix64(seed) ^ mix64(stream + 1) * 0xD1B54A32D192ED03)
//
// where mix64 is the SplitMix64 finalizer. Streams are independent of the
// order in which they are created, so chain c of a multi-chain run always
// sees the same numbers. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed) ^ (mix64(stream + 1) * 0xD1B54A32D192ED03ULL))) {}

// Stream ids used across the library, so distinct consumers of one seed never
// share random numbers.
namespace streams {
inline constexpr std::uint64_t kChainBase = 0;          // chain c uses kChainBase + c
inline constexpr std::uint64_t kChibJeliazkov = 1u << 20;
inline constexpr std::uint64_t kHoldout = 2u << 20;
inline constexpr std::uint64_t kCovariates = 3u << 20;
inline constexpr std::uint64_t kResponse = 4u << 20;
}  // namespace streams

}  // namespace gevreg
