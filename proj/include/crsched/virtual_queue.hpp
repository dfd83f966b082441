#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crsched/channel.hpp"
#include "crsched/decision.hpp"
#include "crsched/queueing.hpp"

namespace crsched {

/// Per-SU delay virtual queue
///   Y(t+1) = max(Y(t) + sum_{j departing} (W_j - d), 0),  Y(0) = 0.
/// Y stays bounded relative to t exactly when the SU's average delay stays
/// within d.
class DelayVirtualQueue {
 public:
  explicit DelayVirtualQueue(double delay_bound);

  double value() const noexcept { return y_; }
  double delay_bound() const noexcept { return d_; }

  /// End-of-slot update from that slot's committed departures.
  /// Excess is summed in FIFO order, then added to Y.
  void update(const DepartureBatch& batch) noexcept;

 private:
  double y_ = 0.0;
  double d_;
};

/// Interference virtual queue
///   X(t+1) = max(X(t) + sum_i P_i g_i - I_avg, 0),  X(0) = 0.
class InterferenceVirtualQueue {
 public:
  explicit InterferenceVirtualQueue(double budget);

  double value() const noexcept { return x_; }
  double budget() const noexcept { return budget_; }

  /// `received` is the interference the PU saw this slot (0 when idle).
  void update(double received) noexcept;

 private:
  double x_ = 0.0;
  double budget_;
};

/// Interference the decision puts on the PU: g of the scheduled SU, 0 if idle.
double received_interference(const ScheduleDecision& decision, const ChannelSample& sample);

void update_interference_vq(InterferenceVirtualQueue& vq, const ScheduleDecision& decision,
                            const ChannelSample& sample);

/// (x + sum(ys)) / ((N + 1) * T) with N = ys.size(): the single-trajectory
/// estimate of the time-normalized virtual-queue average used as the
/// stopping criterion.
double stability_metric(double x, std::span<const double> ys, std::int64_t horizon);

/// Terminal value over horizon for each tracked queue (X first, then Y_i).
struct StabilityProbe {
  std::int64_t horizon = 0;
  std::vector<double> terminal_over_t;
};

StabilityProbe probe_stability(double x, std::span<const double> ys, std::int64_t horizon);

}  // namespace crsched
