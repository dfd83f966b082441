#include "crsched/scheduler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crsched {

std::string_view to_string(SchedulerKind kind) noexcept {
  switch (kind) {
    case SchedulerKind::ProposedIdling:
      return "proposed-idling";
    case SchedulerKind::ProposedNonIdling:
      return "proposed-nonidling";
    case SchedulerKind::MaxWeight:
      return "max-weight";
  }
  return "unknown";
}

std::optional<SchedulerKind> parse_scheduler_kind(std::string_view name) noexcept {
  for (auto kind : {SchedulerKind::ProposedIdling, SchedulerKind::ProposedNonIdling,
                    SchedulerKind::MaxWeight}) {
    if (name == to_string(kind)) {
      return kind;
    }
  }
  return std::nullopt;
}

std::string_view to_string(PhiRateMode mode) noexcept {
  return mode == PhiRateMode::ActualDepartures ? "actual" : "literal";
}

std::optional<PhiRateMode> parse_phi_mode(std::string_view name) noexcept {
  if (name == "actual") return PhiRateMode::ActualDepartures;
  if (name == "literal") return PhiRateMode::LiteralRate;
  return std::nullopt;
}

double transmission_rate(double gamma, bool scheduled) {
  if (!(gamma >= 0.0)) {
    throw std::invalid_argument("direct channel gain must be non-negative");
  }
  return scheduled ? std::log2(1.0 + gamma) : 0.0;
}

std::size_t transmittable_packets(double rate, std::size_t backlog) {
  const double whole = std::floor(rate);
  if (whole >= static_cast<double>(backlog)) {
    return backlog;
  }
  return whole <= 0.0 ? 0 : static_cast<std::size_t>(whole);
}

double compute_phi(const SuState& su, std::size_t su_index, const InterferenceVirtualQueue& x,
                   const ChannelSample& sample, Slot slot, PhiRateMode mode,
                   DepartureBatch* batch) {
  const std::size_t q = su.queue.backlog();
  const double rate = transmission_rate(sample.direct[su_index], true);
  const std::size_t n = transmittable_packets(rate, q);

  DepartureBatch local;
  DepartureBatch& departures = batch != nullptr ? *batch : local;
  departures = su.queue.peek_departures(n, slot);

  const double y = su.delay.value();
  const double d = su.delay.delay_bound();
  const double served = mode == PhiRateMode::ActualDepartures ? static_cast<double>(n) : rate;
  return x.value() * sample.interference[su_index] +
         y * static_cast<double>(departures.waiting_sum()) -
         (y * d + static_cast<double>(q)) * served;
}

std::optional<std::size_t> select_min_phi(std::span<const std::optional<double>> phi,
                                          bool idling) noexcept {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] && (!best || *phi[i] < *phi[*best])) {
      best = i;
    }
  }
  if (best && idling && *phi[*best] > 0.0) {
    return std::nullopt;
  }
  return best;
}

ScheduleDecision decide_proposed(std::span<const SuState> sus, const InterferenceVirtualQueue& x,
                                 const ChannelSample& sample, Slot slot, bool idling,
                                 PhiRateMode mode) {
  ScheduleDecision decision;
  decision.phi_values.resize(sus.size());
  decision.prospective_batch.slot = slot;

  std::optional<std::size_t> best;
  DepartureBatch candidate;
  for (std::size_t i = 0; i < sus.size(); ++i) {
    if (sus[i].queue.backlog() == 0) {
      continue;
    }
    const double phi = compute_phi(sus[i], i, x, sample, slot, mode, &candidate);
    decision.phi_values[i] = phi;
    if (!best || phi < *decision.phi_values[*best]) {
      best = i;
      std::swap(decision.prospective_batch, candidate);
    }
  }

  decision.scheduled = select_min_phi(decision.phi_values, idling);
  if (!decision.scheduled) {
    decision.prospective_batch = DepartureBatch{slot, {}};
  }
  return decision;
}

ScheduleDecision decide_max_weight(std::span<const SuState> sus, const ChannelSample& sample,
                                   Slot slot) {
  ScheduleDecision decision;
  decision.phi_values.resize(sus.size());
  decision.prospective_batch.slot = slot;

  std::optional<std::size_t> best;
  double best_weight = 0.0;
  for (std::size_t i = 0; i < sus.size(); ++i) {
    const std::size_t q = sus[i].queue.backlog();
    if (q == 0) {
      continue;
    }
    const double g = sample.interference[i];
    const double weight =
        g == 0.0 ? std::numeric_limits<double>::infinity() : static_cast<double>(q) / g;
    if (!best || weight > best_weight) {
      best = i;
      best_weight = weight;
    }
  }

  if (best) {
    decision.scheduled = best;
    const double rate = transmission_rate(sample.direct[*best], true);
    decision.prospective_batch = sus[*best].queue.peek_departures(
        transmittable_packets(rate, sus[*best].queue.backlog()), slot);
  }
  return decision;
}

ScheduleDecision decide(const SchedulerConfig& config, std::span<const SuState> sus,
                        const InterferenceVirtualQueue& x, const ChannelSample& sample,
                        Slot slot) {
  switch (config.kind) {
    case SchedulerKind::ProposedIdling:
      return decide_proposed(sus, x, sample, slot, true, config.phi_mode);
    case SchedulerKind::ProposedNonIdling:
      return decide_proposed(sus, x, sample, slot, false, config.phi_mode);
    case SchedulerKind::MaxWeight:
      return decide_max_weight(sus, sample, slot);
  }
  throw std::logic_error("unknown scheduler kind");
}

double psi_objective(std::span<const SuState> sus, const InterferenceVirtualQueue& x,
                     const ChannelSample& sample, Slot slot,
                     std::optional<std::size_t> scheduled) {
  double psi = 0.0;
  for (std::size_t i = 0; i < sus.size(); ++i) {
    const bool on = scheduled == i;
    if (!on) {
      // P_i = 0 and D_i is empty: every term of SU i vanishes.
      continue;
    }
    const auto& queue = sus[i].queue;
    const double rate = transmission_rate(sample.direct[i], on);
    const DepartureBatch d_set =
        queue.peek_departures(transmittable_packets(rate, queue.backlog()), slot);

    double excess = 0.0;
    for (std::int64_t w : d_set.waiting_times) {
      excess += static_cast<double>(w) - sus[i].delay.delay_bound();
    }
    psi += x.value() * sample.interference[i] + sus[i].delay.value() * excess -
           static_cast<double>(queue.backlog()) * static_cast<double>(d_set.count());
  }
  return psi;
}

std::optional<std::size_t> brute_force_psi_choice(std::span<const SuState> sus,
                                                  const InterferenceVirtualQueue& x,
                                                  const ChannelSample& sample, Slot slot,
                                                  bool idling) {
  std::optional<std::size_t> best;
  double best_psi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sus.size(); ++i) {
    if (sus[i].queue.backlog() == 0) {
      continue;
    }
    const double psi = psi_objective(sus, x, sample, slot, i);
    if (psi < best_psi) {
      best = i;
      best_psi = psi;
    }
  }
  if (!best) {
    return std::nullopt;
  }
  if (idling && psi_objective(sus, x, sample, slot, std::nullopt) < best_psi) {
    return std::nullopt;
  }
  return best;
}

}  // namespace crsched
