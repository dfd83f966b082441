#include "crsched/virtual_queue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crsched {

DelayVirtualQueue::DelayVirtualQueue(double delay_bound) : d_(delay_bound) {
  if (!std::isfinite(delay_bound) || delay_bound <= 0.0) {
    throw std::invalid_argument("delay bound must be positive");
  }
}

void DelayVirtualQueue::update(const DepartureBatch& batch) noexcept {
  double excess = 0.0;
  for (std::int64_t w : batch.waiting_times) {
    excess += static_cast<double>(w) - d_;
  }
  y_ = std::max(y_ + excess, 0.0);
}

InterferenceVirtualQueue::InterferenceVirtualQueue(double budget) : budget_(budget) {
  if (!std::isfinite(budget) || budget <= 0.0) {
    throw std::invalid_argument("interference budget must be positive");
  }
}

void InterferenceVirtualQueue::update(double received) noexcept {
  x_ = std::max(x_ + received - budget_, 0.0);
}

double received_interference(const ScheduleDecision& decision, const ChannelSample& sample) {
  return decision.scheduled ? sample.interference.at(*decision.scheduled) : 0.0;
}

void update_interference_vq(InterferenceVirtualQueue& vq, const ScheduleDecision& decision,
                            const ChannelSample& sample) {
  vq.update(received_interference(decision, sample));
}

double stability_metric(double x, std::span<const double> ys, std::int64_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("stability metric needs a horizon of at least one slot");
  }
  double total = x;
  for (double y : ys) {
    total += y;
  }
  return total / (static_cast<double>(ys.size() + 1) * static_cast<double>(horizon));
}

StabilityProbe probe_stability(double x, std::span<const double> ys, std::int64_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("stability probe needs a horizon of at least one slot");
  }
  StabilityProbe probe;
  probe.horizon = horizon;
  probe.terminal_over_t.reserve(ys.size() + 1);
  probe.terminal_over_t.push_back(x / static_cast<double>(horizon));
  for (double y : ys) {
    probe.terminal_over_t.push_back(y / static_cast<double>(horizon));
  }
  return probe;
}

}  // namespace crsched
