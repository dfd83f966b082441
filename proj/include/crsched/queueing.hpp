#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crsched/random.hpp"

namespace crsched {

/// Slot index. Slot 0 is the first simulated slot.
using Slot = std::int64_t;

/// Default hard limit on a single SU's backlog before a run is declared
/// infeasible.
inline constexpr std::size_t kDefaultBufferCap = 10'000'000;

/// Raised when a queue's backlog exceeds its safety cap, i.e. the offered load
/// cannot be supported.
class InfeasibleLoad : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PacketRecord {
  Slot arrival_slot = 0;
  std::optional<Slot> departure_slot;
  /// departure_slot - arrival_slot + 1: the transmission slot counts.
  std::optional<std::int64_t> waiting_slots;
};

/// Packets arriving at the beginning of a slot.
class ArrivalProcess {
 public:
  enum class Kind { Bernoulli, TruncatedPoisson };

  /// One packet with probability `rate`; A_max = 1.
  static ArrivalProcess bernoulli(double rate);
  /// Poisson(rate) conditioned on at most `cap` arrivals; A_max = cap.
  static ArrivalProcess truncated_poisson(double rate, int cap);

  Kind kind() const noexcept { return kind_; }
  double rate() const noexcept { return rate_; }
  int max_arrivals() const noexcept { return cap_; }

  /// Same process with a different rate parameter (validated again).
  ArrivalProcess with_rate(double rate) const;

  /// Expected arrivals per slot. Equals rate() for Bernoulli; for the truncated
  /// Poisson it is the renormalized mean over 0..cap.
  double mean() const;

  /// Draws one slot's arrival count. Consumes exactly one uniform.
  int draw(RandomStream& rng) const;

  std::string describe() const;

  friend bool operator==(const ArrivalProcess&, const ArrivalProcess&) = default;

 private:
  ArrivalProcess(Kind kind, double rate, int cap);

  Kind kind_;
  double rate_;
  int cap_;
  // Cumulative truncated-Poisson probabilities for 0..cap-1 (unused for Bernoulli).
  std::vector<double> cdf_;
};

/// Would-be (peek) or committed departures of one SU in one slot.
struct DepartureBatch {
  Slot slot = 0;
  /// W of each departing packet, in FIFO order (hence non-increasing).
  std::vector<std::int64_t> waiting_times;

  std::size_t count() const noexcept { return waiting_times.size(); }
  std::int64_t waiting_sum() const noexcept;
};

/// FIFO buffer of one SU plus its delay bookkeeping.
class SuQueue {
 public:
  explicit SuQueue(ArrivalProcess arrivals, std::size_t buffer_cap = kDefaultBufferCap);

  /// Draws |A(t)| and enqueues that many packets stamped with `slot`.
  /// Throws InfeasibleLoad if the backlog would exceed the buffer cap.
  int draw_arrivals(Slot slot, RandomStream& rng);

  /// Enqueues `count` packets arriving at `slot` without drawing.
  void push_arrivals(Slot slot, int count);

  /// The first min(Q, n_max) packets' waiting times if they left at `slot`.
  DepartureBatch peek_departures(std::size_t n_max, Slot slot) const;

  /// Removes batch.count() head packets. The batch must come from
  /// peek_departures on this queue at the same slot; a stale batch throws
  /// std::logic_error. Departed records are appended to `departed` if given.
  void commit_departures(const DepartureBatch& batch,
                         std::vector<PacketRecord>* departed = nullptr);

  /// Mean W over departed packets; nullopt until the first departure.
  std::optional<double> average_delay() const;

  std::size_t backlog() const noexcept { return fifo_.size(); }
  std::int64_t cumulative_arrivals() const noexcept { return cumulative_arrivals_; }
  std::int64_t cumulative_departures() const noexcept { return cumulative_departures_; }
  std::int64_t departed_waiting_sum() const noexcept { return departed_waiting_sum_; }
  const ArrivalProcess& arrivals() const noexcept { return arrivals_; }
  std::size_t buffer_cap() const noexcept { return buffer_cap_; }

  /// Arrival slots of the queued packets, head first.
  const std::deque<Slot>& fifo() const noexcept { return fifo_; }

 private:
  ArrivalProcess arrivals_;
  std::size_t buffer_cap_;
  std::deque<Slot> fifo_;
  std::int64_t cumulative_arrivals_ = 0;
  std::int64_t cumulative_departures_ = 0;
  std::int64_t departed_waiting_sum_ = 0;
};

}  // namespace crsched
