#include "crsched/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crsched {

void SimConfig::validate() const {
  if (sus.empty()) {
    throw std::invalid_argument("at least one SU is required");
  }
  for (const auto& su : sus) {
    if (!(su.delay_bound > 0.0) || !std::isfinite(su.delay_bound)) {
      throw std::invalid_argument("delay bound must be positive");
    }
  }
  if (!(interference_budget > 0.0) || !std::isfinite(interference_budget)) {
    throw std::invalid_argument("interference budget must be positive");
  }
  // epsilon = 0 is accepted: it makes the stopping criterion unreachable.
  if (!(epsilon >= 0.0)) {
    throw std::invalid_argument("epsilon must be non-negative");
  }
  if (check_interval < 1) {
    throw std::invalid_argument("check interval must be at least 1");
  }
  if (max_slots < check_interval) {
    throw std::invalid_argument("max slots must be at least the check interval");
  }
  if (series_stride < 0) {
    throw std::invalid_argument("series stride must be non-negative");
  }
  if (buffer_cap < 1) {
    throw std::invalid_argument("buffer cap must be at least 1");
  }
}

std::optional<double> MetricsLedger::average_delay(std::size_t su) const {
  if (departed.at(su) == 0) {
    return std::nullopt;
  }
  return static_cast<double>(waiting_sum[su]) / static_cast<double>(departed[su]);
}

bool DriftDiagnostics::jensen_holds() const noexcept {
  return std::all_of(queue_over_t.begin(), queue_over_t.end(),
                     [this](double v) { return v <= jensen_bound; });
}

DriftDiagnostics drift_diagnostics(const MetricsLedger& ledger, const SimConfig& config) {
  if (!ledger.series_enabled) {
    throw DiagnosticsUnavailable("drift diagnostics unavailable: time series disabled");
  }
  if (ledger.slots < 1) {
    throw DiagnosticsUnavailable("drift diagnostics unavailable: no slots simulated");
  }
  DriftDiagnostics diag;
  double g_max = 0.0;
  for (const auto& su : config.sus) {
    g_max = std::max(g_max, su.interference.cap());
  }
  diag.c_x = g_max * g_max + config.interference_budget * config.interference_budget;
  diag.c = diag.c_x;

  const double t = static_cast<double>(ledger.slots);
  for (std::size_t i = 0; i < config.sus.size(); ++i) {
    const double a_max = config.sus[i].arrivals.max_arrivals();
    const double r_max = transmission_rate(config.sus[i].direct.cap(), true);
    diag.c_q.push_back(a_max * a_max + r_max * r_max);
    diag.c_y_empirical.push_back(ledger.max_delay_term[i]);
    diag.c += diag.c_q.back() + diag.c_y_empirical.back();
    diag.queue_over_t.push_back(static_cast<double>(ledger.terminal_q[i]) / t);
  }
  diag.mean_drift = ledger.drift_sum / t;
  diag.jensen_bound = std::sqrt(diag.c / t);
  return diag;
}

namespace {

std::vector<SuState> make_su_states(const SimConfig& config) {
  std::vector<SuState> sus;
  sus.reserve(config.sus.size());
  for (const auto& su : config.sus) {
    sus.push_back(SuState{SuQueue(su.arrivals, config.buffer_cap), DelayVirtualQueue(su.delay_bound)});
  }
  return sus;
}

std::vector<SuChannelModels> make_channel_models(const SimConfig& config) {
  std::vector<SuChannelModels> models;
  models.reserve(config.sus.size());
  for (const auto& su : config.sus) {
    models.push_back(SuChannelModels{su.direct, su.interference});
  }
  return models;
}

}  // namespace

Simulation::Simulation(SimConfig config)
    : config_((config.validate(), std::move(config))),
      sus_(make_su_states(config_)),
      x_(config_.interference_budget),
      channels_(make_channel_models(config_), config_.seed) {
  const std::size_t n = config_.sus.size();
  arrival_streams_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    arrival_streams_.push_back(RandomStream::derived(config_.seed, i, StreamPurpose::Arrivals));
  }
  ledger_.arrivals.assign(n, 0);
  ledger_.departed.assign(n, 0);
  ledger_.waiting_sum.assign(n, 0);
  ledger_.terminal_q.assign(n, 0);
  ledger_.terminal_y.assign(n, 0.0);
  ledger_.max_delay_term.assign(n, 0.0);
  ledger_.series_enabled = config_.series_stride > 0;
  arrivals_.assign(n, 0);
}

void Simulation::run_slot() {
  const Slot slot = ledger_.slots;
  const std::size_t n = sus_.size();

  for (std::size_t i = 0; i < n; ++i) {
    arrivals_[i] = sus_[i].queue.draw_arrivals(slot, arrival_streams_[i]);
  }

  channels_.sample_slot_into(sample_);

  ScheduleDecision decision = decide(config_.scheduler, sus_, x_, sample_, slot);

  if (config_.verify_psi && config_.scheduler.kind != SchedulerKind::MaxWeight &&
      config_.scheduler.phi_mode == PhiRateMode::ActualDepartures) {
    const bool idling = config_.scheduler.kind == SchedulerKind::ProposedIdling;
    const auto expected = brute_force_psi_choice(sus_, x_, sample_, slot, idling);
    if (expected != decision.scheduled) {
      std::ostringstream os;
      os << "psi mismatch at slot " << slot;
      throw std::logic_error(os.str());
    }
  }

  bool backlogged = false;
  for (const auto& su : sus_) {
    backlogged = backlogged || su.queue.backlog() > 0;
  }

  if (decision.scheduled) {
    const std::size_t s = *decision.scheduled;
    sus_[s].queue.commit_departures(decision.prospective_batch);
    sus_[s].delay.update(decision.prospective_batch);
    // Unscheduled SUs have no departures: Y_i + empty sum is unchanged.
    const auto& batch = decision.prospective_batch;
    const double d = sus_[s].delay.delay_bound();
    const double count = static_cast<double>(batch.count());
    const double w_sum = static_cast<double>(batch.waiting_sum());
    ledger_.max_delay_term[s] =
        std::max(ledger_.max_delay_term[s], d * d * count * count + w_sum * w_sum);
  }

  const double received = received_interference(decision, sample_);
  x_.update(received);

  ++ledger_.slots;
  ledger_.interference_sum += received;
  if (decision.idle()) {
    ++ledger_.idle_slots;
    if (backlogged) {
      ++ledger_.idle_with_backlog;
    }
  }
  double lyapunov = x_.value() * x_.value();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& q = sus_[i].queue;
    ledger_.arrivals[i] = q.cumulative_arrivals();
    ledger_.departed[i] = q.cumulative_departures();
    ledger_.waiting_sum[i] = q.departed_waiting_sum();
    ledger_.terminal_q[i] = static_cast<std::int64_t>(q.backlog());
    ledger_.terminal_y[i] = sus_[i].delay.value();
    const double qd = static_cast<double>(q.backlog());
    lyapunov += ledger_.terminal_y[i] * ledger_.terminal_y[i] + qd * qd;
  }
  lyapunov *= 0.5;
  ledger_.terminal_x = x_.value();
  ledger_.drift_sum += lyapunov - ledger_.lyapunov;
  ledger_.lyapunov = lyapunov;

  if (ledger_.series_enabled && ledger_.slots % config_.series_stride == 0) {
    record_series();
  }

  if (observer_) {
    observer_(SlotRecord{slot, arrivals_, &sample_, &decision, sus_, x_.value()});
  }
}

void Simulation::record_series() {
  ledger_.series.push_back(
      SeriesPoint{ledger_.slots, ledger_.terminal_q, ledger_.terminal_y, ledger_.terminal_x});
}

double Simulation::stability_metric() const {
  return crsched::stability_metric(ledger_.terminal_x, ledger_.terminal_y,
                                   std::max<std::int64_t>(ledger_.slots, 1));
}

RunResult Simulation::result(bool converged, std::optional<std::string> abort_reason) const {
  RunResult r;
  r.converged = converged;
  r.stability_metric = stability_metric();
  r.slots = ledger_.slots;
  r.interference_average = ledger_.interference_average();
  for (std::size_t i = 0; i < sus_.size(); ++i) {
    r.average_delay.push_back(ledger_.average_delay(i));
  }
  r.abort_reason = std::move(abort_reason);
  if (ledger_.series_enabled && ledger_.slots > 0) {
    r.drift = drift_diagnostics(ledger_, config_);
  }
  r.ledger = ledger_;
  return r;
}

RunResult run_until_converged(const SimConfig& config) {
  Simulation sim(config);
  try {
    while (sim.slots_run() < config.max_slots) {
      sim.run_slot();
      if (sim.slots_run() % config.check_interval == 0 &&
          sim.stability_metric() < config.epsilon) {
        return sim.result(true);
      }
    }
  } catch (const InfeasibleLoad& e) {
    return sim.result(false, e.what());
  }
  return sim.result(false);
}

std::vector<RunResult> run_ensemble_until_converged(const SimConfig& config,
                                                    std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) {
    throw std::invalid_argument("ensemble needs at least one seed");
  }
  std::vector<Simulation> sims;
  sims.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    SimConfig c = config;
    c.seed = seed;
    sims.emplace_back(std::move(c));
  }

  auto finish = [&](bool converged, std::optional<std::size_t> aborted, const std::string& why) {
    std::vector<RunResult> results;
    for (std::size_t k = 0; k < sims.size(); ++k) {
      std::optional<std::string> reason;
      if (aborted) {
        reason = k == *aborted ? why : "ensemble member aborted: " + why;
      }
      // A member counts as converged only if its own metric is below epsilon.
      const bool own = converged && sims[k].stability_metric() < config.epsilon;
      results.push_back(sims[k].result(own, reason));
    }
    return results;
  };

  std::int64_t t = 0;
  while (t < config.max_slots) {
    const std::int64_t chunk = std::min(config.check_interval - t % config.check_interval,
                                        config.max_slots - t);
    for (std::size_t k = 0; k < sims.size(); ++k) {
      try {
        for (std::int64_t s = 0; s < chunk; ++s) {
          sims[k].run_slot();
        }
      } catch (const InfeasibleLoad& e) {
        return finish(false, k, e.what());
      }
    }
    t += chunk;
    if (t % config.check_interval == 0) {
      double mean_metric = 0.0;
      for (const auto& sim : sims) {
        mean_metric += sim.stability_metric();
      }
      mean_metric /= static_cast<double>(sims.size());
      if (mean_metric < config.epsilon) {
        return finish(true, std::nullopt, {});
      }
    }
  }
  return finish(false, std::nullopt, {});
}

}  // namespace crsched
