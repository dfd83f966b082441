#pragma once

// Brute-force re-simulation of the queue recursions, used as a test oracle.
// It takes the random inputs (arrival counts, channel gains) of each slot and
// recomputes everything else on its own: backlog, FIFO ages, the phi index or
// Max-Weight choice, departures, and both virtual queues. Shares no code with
// the library's queue, scheduler or engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace crsched::testing {

struct ReferenceParams {
  std::vector<double> delay_bound;
  double budget = 1.0;
  enum class Rule { Idling, NonIdling, MaxWeight } rule = Rule::Idling;
  bool literal_rate = false;
};

class ReferenceSim {
 public:
  explicit ReferenceSim(ReferenceParams p)
      : p_(std::move(p)), fifo_(p_.delay_bound.size()), y_(p_.delay_bound.size(), 0.0) {}

  // Returns the scheduled SU or -1.
  int step(const std::vector<int>& arrivals, const std::vector<double>& gamma,
           const std::vector<double>& g) {
    const std::size_t n = fifo_.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < arrivals[i]; ++a) fifo_[i].push_back(t_);
    }

    std::vector<std::int64_t> served(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::log2(1.0 + gamma[i]);
      std::int64_t k = 0;
      while (k < static_cast<std::int64_t>(fifo_[i].size()) && static_cast<double>(k + 1) <= r) ++k;
      served[i] = k;
    }

    int pick = -1;
    if (p_.rule == ReferenceParams::Rule::MaxWeight) {
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fifo_[i].empty()) continue;
        const double w = g[i] == 0.0 ? std::numeric_limits<double>::infinity()
                                     : static_cast<double>(fifo_[i].size()) / g[i];
        if (pick < 0 || w > best) {
          pick = static_cast<int>(i);
          best = w;
        }
      }
    } else {
      double best = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fifo_[i].empty()) continue;
        std::int64_t w_sum = 0;
        for (std::int64_t j = 0; j < served[i]; ++j) w_sum += t_ - fifo_[i][j] + 1;
        const double q = static_cast<double>(fifo_[i].size());
        const double rate = p_.literal_rate ? std::log2(1.0 + gamma[i]) : static_cast<double>(served[i]);
        const double phi = x_ * g[i] + y_[i] * static_cast<double>(w_sum) -
                           (y_[i] * p_.delay_bound[i] + q) * rate;
        if (pick < 0 || phi < best) {
          pick = static_cast<int>(i);
          best = phi;
        }
      }
      if (pick >= 0 && p_.rule == ReferenceParams::Rule::Idling && best > 0.0) pick = -1;
    }

    double received = 0.0;
    if (pick >= 0) {
      auto& f = fifo_[pick];
      double excess = 0.0;
      for (std::int64_t j = 0; j < served[pick]; ++j) {
        excess += static_cast<double>(t_ - f[j] + 1) - p_.delay_bound[pick];
      }
      f.erase(f.begin(), f.begin() + served[pick]);
      y_[pick] = std::max(y_[pick] + excess, 0.0);
      received = g[pick];
    }
    x_ = std::max(x_ + received - p_.budget, 0.0);
    ++t_;
    return pick;
  }

  std::int64_t q(std::size_t i) const { return static_cast<std::int64_t>(fifo_[i].size()); }
  double y(std::size_t i) const { return y_[i]; }
  double x() const { return x_; }

 private:
  ReferenceParams p_;
  std::vector<std::vector<std::int64_t>> fifo_;
  std::vector<double> y_;
  double x_ = 0.0;
  std::int64_t t_ = 0;
};

}  // namespace crsched::testing
