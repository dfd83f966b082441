#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crsched/channel.hpp"
#include "crsched/decision.hpp"
#include "crsched/queueing.hpp"
#include "crsched/scheduler.hpp"
#include "crsched/virtual_queue.hpp"

namespace crsched {

struct SuConfig {
  ArrivalProcess arrivals = ArrivalProcess::bernoulli(0.0);
  double delay_bound = 1.0;
  ChannelModel direct = ChannelModel::deterministic(1.0);
  ChannelModel interference = ChannelModel::rayleigh(1.0);
};

struct SimConfig {
  std::vector<SuConfig> sus;
  double interference_budget = 1.0;
  SchedulerConfig scheduler;
  double epsilon = 0.01;
  std::int64_t max_slots = 1'000'000;
  std::int64_t check_interval = 10'000;
  std::uint64_t seed = 1;
  /// Record Q, Y, X every `series_stride` slots; 0 disables the series.
  std::int64_t series_stride = 100;
  std::size_t buffer_cap = kDefaultBufferCap;
  /// Cross-check every proposed-scheduler decision against brute-force Psi
  /// enumeration; a mismatch throws std::logic_error.
  bool verify_psi = false;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

struct SeriesPoint {
  std::int64_t slot = 0;  // number of completed slots
  std::vector<std::int64_t> q;
  std::vector<double> y;
  double x = 0.0;
};

/// Running sums of one run. All counts are monotone in time.
struct MetricsLedger {
  std::int64_t slots = 0;
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> departed;
  std::vector<std::int64_t> waiting_sum;
  std::int64_t idle_slots = 0;
  /// Slots that idled while some SU was backlogged.
  std::int64_t idle_with_backlog = 0;
  double interference_sum = 0.0;

  std::vector<std::int64_t> terminal_q;
  std::vector<double> terminal_y;
  double terminal_x = 0.0;

  /// Sum over slots of L(t+1) - L(t), L = (X^2 + sum_i (Y_i^2 + Q_i^2)) / 2.
  double drift_sum = 0.0;
  double lyapunov = 0.0;
  /// Per SU, max over slots of d_i^2 |D_i|^2 + (sum_{j in D_i} W_j)^2.
  std::vector<double> max_delay_term;

  std::vector<SeriesPoint> series;
  bool series_enabled = false;

  double interference_average() const noexcept {
    return slots == 0 ? 0.0 : interference_sum / static_cast<double>(slots);
  }
  std::optional<double> average_delay(std::size_t su) const;
};

/// Bound constants from the drift argument plus their empirical shadows.
struct DriftDiagnostics {
  double c_x = 0.0;                   // g_max^2 + I_avg^2
  std::vector<double> c_q;            // A_max^2 + R_max^2 per SU
  std::vector<double> c_y_empirical;  // surrogate: empirical max, not a proven bound
  double c = 0.0;                     // C_X + sum_i (C_Y_i + C_Q_i)
  double mean_drift = 0.0;            // (1/T) sum_t [L(t+1) - L(t)]
  std::vector<double> queue_over_t;   // Q_i(T) / T
  double jensen_bound = 0.0;          // sqrt(C / T)

  bool drift_within_bound() const noexcept { return mean_drift <= c; }
  bool jensen_holds() const noexcept;
};

class DiagnosticsUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

DriftDiagnostics drift_diagnostics(const MetricsLedger& ledger, const SimConfig& config);

struct RunResult {
  bool converged = false;
  double stability_metric = 0.0;
  std::vector<std::optional<double>> average_delay;
  double interference_average = 0.0;
  std::int64_t slots = 0;
  /// Set when the run stopped on a buffer-cap violation; metrics are partial.
  std::optional<std::string> abort_reason;
  std::optional<DriftDiagnostics> drift;
  MetricsLedger ledger;
};

/// Everything observable about one completed slot, for tracing and tests.
struct SlotRecord {
  Slot slot = 0;
  std::span<const int> arrivals;
  const ChannelSample* sample = nullptr;
  const ScheduleDecision* decision = nullptr;
  std::span<const SuState> sus;  // state after the slot's updates
  double x = 0.0;                // X after the slot's update
};

/// One run's state machine. Each slot executes, in order:
///   1. arrivals for every SU,
///   2. channel sample,
///   3. scheduling decision,
///   4. departures of the scheduled SU (n = min(Q, floor R)),
///   5. Y_i updates from the committed batches (empty for unscheduled SUs),
///   6. X update,
///   7. metrics.
class Simulation {
 public:
  explicit Simulation(SimConfig config);

  /// Runs one slot. Throws InfeasibleLoad when a buffer cap is exceeded.
  void run_slot();

  std::int64_t slots_run() const noexcept { return ledger_.slots; }
  double stability_metric() const;
  std::span<const SuState> sus() const noexcept { return sus_; }
  const InterferenceVirtualQueue& interference_queue() const noexcept { return x_; }
  const MetricsLedger& ledger() const noexcept { return ledger_; }
  const SimConfig& config() const noexcept { return config_; }

  void set_observer(std::function<void(const SlotRecord&)> observer) {
    observer_ = std::move(observer);
  }

  /// Snapshot of the current metrics as a RunResult.
  RunResult result(bool converged, std::optional<std::string> abort_reason = std::nullopt) const;

 private:
  void record_series();

  SimConfig config_;
  std::vector<SuState> sus_;
  InterferenceVirtualQueue x_;
  ChannelSampler channels_;
  std::vector<RandomStream> arrival_streams_;
  MetricsLedger ledger_;
  std::function<void(const SlotRecord&)> observer_;

  ChannelSample sample_;
  std::vector<int> arrivals_;
};

/// Runs until the stability metric drops below epsilon at a check (every
/// check_interval slots) or max_slots is reached. A buffer-cap violation ends
/// the run early with abort_reason set.
RunResult run_until_converged(const SimConfig& config);

/// Same as run_until_converged for several seeds in lockstep, stopping when the
/// stability metric averaged across the runs drops below epsilon. Results are
/// in seed order; all share the same stopping slot unless one aborts. A member
/// is flagged converged only if its own metric is also below epsilon.
std::vector<RunResult> run_ensemble_until_converged(const SimConfig& config,
                                                    std::span<const std::uint64_t> seeds);

}  // namespace crsched
