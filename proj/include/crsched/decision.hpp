#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "crsched/queueing.hpp"

namespace crsched {

/// One slot's channel assignment: at most one SU is scheduled.
struct ScheduleDecision {
  /// Index of the scheduled SU; nullopt means the channel idles.
  std::optional<std::size_t> scheduled;
  /// phi_i per SU for the proposed schedulers, nullopt for SUs with Q_i = 0
  /// and for Max-Weight.
  std::vector<std::optional<double>> phi_values;
  /// Departures the scheduled SU makes this slot (empty when idle).
  DepartureBatch prospective_batch;

  bool idle() const noexcept { return !scheduled.has_value(); }
};

}  // namespace crsched
