#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crsched/random.hpp"

namespace crsched {

/// Default truncation of an exponential power gain, as a multiple of its mean.
/// P(gain > 25 * mean) = e^-25.
inline constexpr double kDefaultRayleighCapFactor = 25.0;

/// Distribution of one power gain (direct or interference) for one SU.
/// Immutable after construction; every sample lies in [0, cap()].
class ChannelModel {
 public:
  enum class Kind { Deterministic, RayleighGain };

  /// Constant gain. The cap defaults to the value itself.
  static ChannelModel deterministic(double value, std::optional<double> cap = std::nullopt);

  /// Rayleigh-faded amplitude, i.e. an exponential power gain with the given
  /// mean, clamped to cap (default 25 * mean).
  static ChannelModel rayleigh(double mean, std::optional<double> cap = std::nullopt);

  Kind kind() const noexcept { return kind_; }
  /// The constant value (Deterministic) or the untruncated mean (RayleighGain).
  double parameter() const noexcept { return parameter_; }
  double cap() const noexcept { return cap_; }

  double sample(RandomStream& rng) const;

  std::string describe() const;

  friend bool operator==(const ChannelModel&, const ChannelModel&) = default;

 private:
  ChannelModel(Kind kind, double parameter, double cap)
      : kind_(kind), parameter_(parameter), cap_(cap) {}

  Kind kind_;
  double parameter_;
  double cap_;
};

inline double sample_gain(const ChannelModel& model, RandomStream& rng) {
  return model.sample(rng);
}

/// Direct (SU -> base station) and interference (SU -> PU) models of one SU.
struct SuChannelModels {
  ChannelModel direct;
  ChannelModel interference;
};

/// One slot's realized gains, indexed by SU.
struct ChannelSample {
  std::vector<double> direct;
  std::vector<double> interference;

  std::size_t size() const noexcept { return direct.size(); }
};

/// Draws ChannelSamples for N SUs. Each SU owns a direct and an interference
/// sub-stream derived from the master seed, so SU i's gain sequence is the
/// same whatever N is.
class ChannelSampler {
 public:
  ChannelSampler(std::vector<SuChannelModels> models, std::uint64_t master_seed);

  /// Draws SU 0..N-1 in order, direct before interference.
  ChannelSample sample_slot();

  /// Same as sample_slot() but reuses `out`'s storage.
  void sample_slot_into(ChannelSample& out);

  std::span<const SuChannelModels> models() const noexcept { return models_; }
  std::size_t size() const noexcept { return models_.size(); }

 private:
  std::vector<SuChannelModels> models_;
  std::vector<RandomStream> direct_streams_;
  std::vector<RandomStream> interference_streams_;
};

}  // namespace crsched
