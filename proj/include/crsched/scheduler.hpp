#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "crsched/channel.hpp"
#include "crsched/decision.hpp"
#include "crsched/queueing.hpp"
#include "crsched/virtual_queue.hpp"

namespace crsched {

enum class SchedulerKind {
  /// Proposed rule: argmin phi over backlogged SUs, idle when every phi > 0.
  ProposedIdling,
  /// Same index, but always schedules while anyone is backlogged.
  ProposedNonIdling,
  /// Baseline: argmax Q_i / g_i over backlogged SUs.
  MaxWeight,
};

/// How the rate term of phi is evaluated.
///   ActualDepartures: phi_i = X g_i + Y_i sum W - (Y_i d_i + Q_i) n_i,
///                     with n_i = min(Q_i, floor(R_i)) head packets. Equals the
///                     drift objective Psi of scheduling SU i alone.
///   LiteralRate:      same, but the last factor is the real-valued R_i.
enum class PhiRateMode { ActualDepartures, LiteralRate };

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::ProposedIdling;
  PhiRateMode phi_mode = PhiRateMode::ActualDepartures;

  friend bool operator==(const SchedulerConfig&, const SchedulerConfig&) = default;
};

/// Short stable identifiers used in configs, CLI flags and CSV files:
/// "proposed-idling", "proposed-nonidling", "max-weight".
std::string_view to_string(SchedulerKind kind) noexcept;
std::optional<SchedulerKind> parse_scheduler_kind(std::string_view name) noexcept;
std::string_view to_string(PhiRateMode mode) noexcept;  // "actual" / "literal"
std::optional<PhiRateMode> parse_phi_mode(std::string_view name) noexcept;

/// Scheduler-visible state of one SU.
struct SuState {
  SuQueue queue;
  DelayVirtualQueue delay;
};

/// log2(1 + gamma) packets when scheduled, 0 otherwise.
double transmission_rate(double gamma, bool scheduled);

/// Whole packets that leave when the SU is served at `rate`: min(Q, floor(rate)).
std::size_t transmittable_packets(double rate, std::size_t backlog);

/// phi_i for SU `su_index` (must be backlogged). If `batch` is non-null it
/// receives the SU's prospective departures.
double compute_phi(const SuState& su, std::size_t su_index, const InterferenceVirtualQueue& x,
                   const ChannelSample& sample, Slot slot, PhiRateMode mode,
                   DepartureBatch* batch = nullptr);

/// Lowest-index argmin over the defined entries; with `idling`, nullopt when
/// the minimum is strictly positive. nullopt when no entry is defined.
std::optional<std::size_t> select_min_phi(std::span<const std::optional<double>> phi,
                                          bool idling) noexcept;

ScheduleDecision decide_proposed(std::span<const SuState> sus, const InterferenceVirtualQueue& x,
                                 const ChannelSample& sample, Slot slot, bool idling,
                                 PhiRateMode mode = PhiRateMode::ActualDepartures);

/// Non-idling: idles only when nobody is backlogged. A zero interference gain
/// counts as infinite weight; ties go to the lowest index.
ScheduleDecision decide_max_weight(std::span<const SuState> sus, const ChannelSample& sample,
                                   Slot slot);

ScheduleDecision decide(const SchedulerConfig& config, std::span<const SuState> sus,
                        const InterferenceVirtualQueue& x, const ChannelSample& sample, Slot slot);

/// Drift objective of one feasible assignment,
///   Psi = sum_i [X P_i g_i + Y_i sum_{j in D_i} (W_j - d_i) - Q_i |D_i|],
/// with departures D_i taken as the n_i head packets of the scheduled SU.
/// `scheduled` = nullopt evaluates the idle assignment (Psi = 0).
double psi_objective(std::span<const SuState> sus, const InterferenceVirtualQueue& x,
                     const ChannelSample& sample, Slot slot, std::optional<std::size_t> scheduled);

/// Enumerates {idle} and every single backlogged SU and returns the Psi
/// minimizer. Idle is only a candidate with `idling` or when nobody is
/// backlogged; on a tie a scheduled SU beats idle and lower indices win.
std::optional<std::size_t> brute_force_psi_choice(std::span<const SuState> sus,
                                                  const InterferenceVirtualQueue& x,
                                                  const ChannelSample& sample, Slot slot,
                                                  bool idling);

}  // namespace crsched
