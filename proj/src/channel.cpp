#include "crsched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crsched {

ChannelModel ChannelModel::deterministic(double value, std::optional<double> cap) {
  const double c = cap.value_or(value);
  if (!std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument("deterministic gain must be finite and non-negative");
  }
  if (!std::isfinite(c) || value > c) {
    throw std::invalid_argument("deterministic gain must not exceed its cap");
  }
  return ChannelModel(Kind::Deterministic, value, c);
}

ChannelModel ChannelModel::rayleigh(double mean, std::optional<double> cap) {
  if (!std::isfinite(mean) || mean <= 0.0) {
    throw std::invalid_argument("rayleigh mean gain must be positive");
  }
  const double c = cap.value_or(kDefaultRayleighCapFactor * mean);
  if (!std::isfinite(c) || c <= 0.0) {
    throw std::invalid_argument("rayleigh gain cap must be positive and finite");
  }
  return ChannelModel(Kind::RayleighGain, mean, c);
}

double ChannelModel::sample(RandomStream& rng) const {
  switch (kind_) {
    case Kind::Deterministic:
      return parameter_;
    case Kind::RayleighGain:
      return std::min(rng.exponential(parameter_), cap_);
  }
  return parameter_;
}

std::string ChannelModel::describe() const {
  std::ostringstream os;
  os << (kind_ == Kind::Deterministic ? "deterministic " : "rayleigh ") << parameter_
     << " cap " << cap_;
  return os.str();
}

ChannelSampler::ChannelSampler(std::vector<SuChannelModels> models, std::uint64_t master_seed)
    : models_(std::move(models)) {
  if (models_.empty()) {
    throw std::invalid_argument("channel sampler needs at least one SU");
  }
  direct_streams_.reserve(models_.size());
  interference_streams_.reserve(models_.size());
  for (std::size_t i = 0; i < models_.size(); ++i) {
    direct_streams_.push_back(
        RandomStream::derived(master_seed, i, StreamPurpose::DirectChannel));
    interference_streams_.push_back(
        RandomStream::derived(master_seed, i, StreamPurpose::InterferenceChannel));
  }
}

ChannelSample ChannelSampler::sample_slot() {
  ChannelSample out;
  sample_slot_into(out);
  return out;
}

void ChannelSampler::sample_slot_into(ChannelSample& out) {
  const std::size_t n = models_.size();
  out.direct.resize(n);
  out.interference.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.direct[i] = models_[i].direct.sample(direct_streams_[i]);
    out.interference[i] = models_[i].interference.sample(interference_streams_[i]);
  }
}

}  // namespace crsched
