#include "crsched/queueing.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>

namespace crsched {

ArrivalProcess::ArrivalProcess(Kind kind, double rate, int cap)
    : kind_(kind), rate_(rate), cap_(cap) {
  if (!std::isfinite(rate) || rate < 0.0) {
    throw std::invalid_argument("arrival rate must be non-negative");
  }
  if (cap < 1) {
    throw std::invalid_argument("maximum arrivals per slot must be at least 1");
  }
  if (rate > cap) {
    throw std::invalid_argument("arrival rate exceeds maximum arrivals per slot");
  }
  if (kind_ == Kind::TruncatedPoisson) {
    std::vector<double> pmf(static_cast<std::size_t>(cap) + 1);
    double term = std::exp(-rate);
    for (int k = 0; k <= cap; ++k) {
      pmf[k] = term;
      term *= rate / (k + 1);
    }
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    double running = 0.0;
    cdf_.reserve(static_cast<std::size_t>(cap));
    for (int k = 0; k < cap; ++k) {
      running += pmf[k];
      cdf_.push_back(running / total);
    }
  }
}

ArrivalProcess ArrivalProcess::bernoulli(double rate) {
  if (rate > 1.0) {
    throw std::invalid_argument("bernoulli arrival rate must be at most 1");
  }
  return ArrivalProcess(Kind::Bernoulli, rate, 1);
}

ArrivalProcess ArrivalProcess::truncated_poisson(double rate, int cap) {
  return ArrivalProcess(Kind::TruncatedPoisson, rate, cap);
}

ArrivalProcess ArrivalProcess::with_rate(double rate) const {
  return kind_ == Kind::Bernoulli ? bernoulli(rate) : truncated_poisson(rate, cap_);
}

double ArrivalProcess::mean() const {
  if (kind_ == Kind::Bernoulli) {
    return rate_;
  }
  // E[K] = sum_k P(K > k) for k = 0..cap-1.
  double m = 0.0;
  for (double c : cdf_) {
    m += 1.0 - c;
  }
  return m;
}

int ArrivalProcess::draw(RandomStream& rng) const {
  const double u = rng.uniform();
  if (kind_ == Kind::Bernoulli) {
    return u < rate_ ? 1 : 0;
  }
  for (std::size_t k = 0; k < cdf_.size(); ++k) {
    if (u < cdf_[k]) {
      return static_cast<int>(k);
    }
  }
  return cap_;
}

std::string ArrivalProcess::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::Bernoulli) {
    os << "bernoulli rate " << rate_;
  } else {
    os << "poisson rate " << rate_ << " cap " << cap_;
  }
  return os.str();
}

std::int64_t DepartureBatch::waiting_sum() const noexcept {
  return std::accumulate(waiting_times.begin(), waiting_times.end(), std::int64_t{0});
}

SuQueue::SuQueue(ArrivalProcess arrivals, std::size_t buffer_cap)
    : arrivals_(std::move(arrivals)), buffer_cap_(buffer_cap) {}

int SuQueue::draw_arrivals(Slot slot, RandomStream& rng) {
  const int count = arrivals_.draw(rng);
  push_arrivals(slot, count);
  return count;
}

void SuQueue::push_arrivals(Slot slot, int count) {
  if (count < 0) {
    throw std::invalid_argument("negative arrival count");
  }
  if (!fifo_.empty() && fifo_.back() > slot) {
    throw std::logic_error("arrivals must be pushed in non-decreasing slot order");
  }
  if (fifo_.size() + static_cast<std::size_t>(count) > buffer_cap_) {
    std::ostringstream os;
    os << "infeasible-load: backlog exceeded buffer cap " << buffer_cap_ << " at slot " << slot;
    throw InfeasibleLoad(os.str());
  }
  fifo_.insert(fifo_.end(), static_cast<std::size_t>(count), slot);
  cumulative_arrivals_ += count;
}

DepartureBatch SuQueue::peek_departures(std::size_t n_max, Slot slot) const {
  DepartureBatch batch;
  batch.slot = slot;
  const std::size_t n = std::min(n_max, fifo_.size());
  batch.waiting_times.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    batch.waiting_times.push_back(slot - fifo_[j] + 1);
  }
  return batch;
}

void SuQueue::commit_departures(const DepartureBatch& batch, std::vector<PacketRecord>* departed) {
  const std::size_t n = batch.count();
  if (n > fifo_.size()) {
    throw std::logic_error("stale departure batch: more departures than backlog");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (batch.waiting_times[j] != batch.slot - fifo_[j] + 1) {
      throw std::logic_error("stale departure batch: waiting times do not match queue head");
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const Slot arrival = fifo_.front();
    fifo_.pop_front();
    const std::int64_t w = batch.slot - arrival + 1;
    assert(w >= 1);
    departed_waiting_sum_ += w;
    if (departed != nullptr) {
      departed->push_back(PacketRecord{arrival, batch.slot, w});
    }
  }
  cumulative_departures_ += static_cast<std::int64_t>(n);
  // Departures never exceed Q, so the (.)^+ clamp on the backlog never fires.
  assert(cumulative_arrivals_ - cumulative_departures_ == static_cast<std::int64_t>(fifo_.size()));
}

std::optional<double> SuQueue::average_delay() const {
  if (cumulative_departures_ == 0) {
    return std::nullopt;
  }
  return static_cast<double>(departed_waiting_sum_) /
         static_cast<double>(cumulative_departures_);
}

}  // namespace crsched
