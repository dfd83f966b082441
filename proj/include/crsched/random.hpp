#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace crsched {

/// What a derived sub-stream is used for. Each (SU, purpose) pair owns one
/// stream so that SU i's sequences do not depend on N or on query order.
enum class StreamPurpose : std::uint64_t {
  DirectChannel = 1,
  InterferenceChannel = 2,
  Arrivals = 3,
};

/// SplitMix64 finalizer. Used only to derive sub-stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the sub-stream for `su_index` and `purpose` under `master_seed`:
///   splitmix64(master_seed ^ splitmix64(su_index * 4 + purpose)).
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t su_index,
                                    StreamPurpose purpose) noexcept {
  return splitmix64(master_seed ^
                    splitmix64(su_index * 4 + static_cast<std::uint64_t>(purpose)));
}

/// Single-owner pseudo-random stream. mt19937_64's output sequence is fixed by
/// the standard, and the conversions below avoid the implementation-defined
/// std:: distributions, so a seed gives the same doubles on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derived(std::uint64_t master_seed, std::uint64_t su_index,
                              StreamPurpose purpose) {
    return RandomStream(derive_seed(master_seed, su_index, purpose));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given mean, by inversion.
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crsched
