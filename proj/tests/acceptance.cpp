// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Detail lines are indented under their criterion.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "crsched/engine.hpp"
#include "crsched/experiment.hpp"
#include "crsched/random.hpp"
#include "crsched/report.hpp"
#include "reference_sim.hpp"

namespace {

namespace fs = std::filesystem;
using namespace crsched;

const fs::path kConfigDir = CRSCHED_CONFIG_DIR;

struct Verdict {
  bool pass = true;
  std::vector<std::string> details;

  void fail(const std::string& why) {
    pass = false;
    details.push_back("FAIL " + why);
  }
  void note(const std::string& what) { details.push_back(what); }
};

int g_failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("[%s] criterion %d: %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str());
  for (const auto& d : v.details) std::printf("        %s\n", d.c_str());
  std::fflush(stdout);
  if (!v.pass) ++g_failures;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("crsched_accept_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

using Key = std::tuple<SchedulerKind, double, std::uint64_t>;

struct SweepOutput {
  ExperimentSpec spec;
  std::vector<SweepRow> rows;
  std::map<Key, RunResult> results;
  fs::path dir;
};

// Runs a sweep and exports rows.csv plus figures the way the CLI does.
SweepOutput run_and_export(ExperimentSpec spec, const fs::path& dir) {
  SweepOutput out;
  std::mutex mu;
  SweepOptions options;
  options.on_result = [&](const SweepRow& row, const RunResult& r) {
    std::lock_guard lock(mu);
    RunResult slim = r;
    slim.ledger.series.clear();
    out.results.emplace(Key{row.scheduler, row.lambda, row.seed}, std::move(slim));
  };
  out.rows = run_sweep(spec, options);
  const auto settings = settings_line(spec);
  {
    std::ofstream f(dir / "rows.csv", std::ios::binary);
    write_rows_csv(f, out.rows, spec.config_sha256, settings);
  }
  emit_figures(out.rows, dir, spec.config_sha256, settings);
  out.spec = std::move(spec);
  out.dir = dir;
  return out;
}

const SweepRow* find_row(const std::vector<SweepRow>& rows, SchedulerKind k, double lambda) {
  for (const auto& r : rows) {
    if (r.scheduler == k && std::abs(r.lambda - lambda) < 1e-12) return &r;
  }
  return nullptr;
}

std::string label(const SweepRow& r) {
  return std::string(to_string(r.scheduler)) + " lambda=" + format_double(r.lambda) +
         " seed=" + std::to_string(r.seed);
}

// 1. Delay and interference constraints for proposed-idling under the table1 config.
Verdict constraint_satisfaction(const SweepOutput& t1) {
  Verdict v;
  const auto& sus = t1.spec.base.sus;
  const double i_avg = t1.spec.base.interference_budget;
  int checked = 0;
  for (const auto& r : t1.rows) {
    if (r.scheduler != SchedulerKind::ProposedIdling || !r.converged) continue;
    ++checked;
    for (std::size_t i = 0; i < sus.size(); ++i) {
      const double limit = sus[i].delay_bound * 1.10;
      if (r.average_delay[i] && *r.average_delay[i] > limit) {
        v.fail(label(r) + ": SU" + std::to_string(i + 1) + " delay " + fmt(*r.average_delay[i]) +
               " > " + fmt(limit));
      }
    }
    if (r.interference_average > i_avg * 1.05) {
      v.fail(label(r) + ": interference " + fmt(r.interference_average) + " > " + fmt(i_avg * 1.05));
    }
  }
  if (checked == 0) v.fail("no converged proposed-idling run");
  v.note(std::to_string(checked) + " converged proposed-idling runs checked");
  // Delay is averaged over departed packets only; show how much traffic is still queued.
  double worst = 0.0;
  std::string worst_label;
  for (const auto& r : t1.rows) {
    if (r.scheduler != SchedulerKind::ProposedIdling || !r.converged) continue;
    for (std::size_t i = 0; i < r.terminal_q.size(); ++i) {
      const double backlog_rate = static_cast<double>(r.terminal_q[i]) / static_cast<double>(r.slots);
      if (backlog_rate > worst) {
        worst = backlog_rate;
        worst_label = label(r) + " SU" + std::to_string(i + 1);
      }
    }
  }
  if (!worst_label.empty()) {
    v.note("info: largest Q_i(T)/T among these runs " + fmt(worst) + " (" + worst_label + ")");
  }
  return v;
}

// 2. Stopping metric recomputed from the exported rows.csv.
Verdict stability_from_export(const std::vector<const SweepOutput*>& outputs) {
  Verdict v;
  int checked = 0;
  for (const auto* out : outputs) {
    std::ifstream in(out->dir / "rows.csv", std::ios::binary);
    const auto file = read_rows_csv(in);
    for (const auto& r : file.rows) {
      if (!r.converged) continue;
      ++checked;
      double total = r.terminal_x;
      for (double y : r.terminal_y) total += y;
      const double n_plus_1 = static_cast<double>(r.terminal_y.size() + 1);
      const double metric = total / (n_plus_1 * static_cast<double>(r.slots));
      if (!(metric < 0.01)) v.fail(label(r) + ": metric " + fmt(metric, 17));
    }
  }
  if (checked == 0) v.fail("no converged runs");
  v.note(std::to_string(checked) + " converged runs recomputed from rows.csv");
  return v;
}

// 3. Binding interference budget.
Verdict binding_regime(const SweepOutput& bind) {
  Verdict v;
  const double i_avg = bind.spec.base.interference_budget;
  const auto* alg1 = find_row(bind.rows, SchedulerKind::ProposedIdling, 0.4);
  const auto* nonidle = find_row(bind.rows, SchedulerKind::ProposedNonIdling, 0.4);
  const auto* mw = find_row(bind.rows, SchedulerKind::MaxWeight, 0.4);
  if (!alg1 || !nonidle || !mw) {
    v.fail("missing lambda=0.4 rows");
    return v;
  }
  v.note("I_avg=" + fmt(i_avg) + ": proposed-idling " + fmt(alg1->interference_average) +
         ", proposed-nonidling " + fmt(nonidle->interference_average) + ", max-weight " +
         fmt(mw->interference_average));
  if (!(alg1->interference_average <= i_avg * 1.05)) v.fail("proposed-idling above 1.05 I_avg");
  if (!(nonidle->interference_average > i_avg)) v.fail("proposed-nonidling does not exceed I_avg");
  if (!(mw->interference_average > i_avg)) v.fail("max-weight does not exceed I_avg");
  return v;
}

// 4. Delay ordering at lambda = 0.4 under the table1 config.
Verdict delay_ordering(const SweepOutput& t1) {
  Verdict v;
  const auto* alg1 = find_row(t1.rows, SchedulerKind::ProposedIdling, 0.4);
  const auto* mw = find_row(t1.rows, SchedulerKind::MaxWeight, 0.4);
  if (!alg1 || !mw || !alg1->average_delay[0] || !mw->average_delay[0] || !mw->average_delay[1]) {
    v.fail("missing rows or undefined delays at lambda=0.4");
    return v;
  }
  const double a1 = *alg1->average_delay[0];
  const double m1 = *mw->average_delay[0];
  const double m2 = *mw->average_delay[1];
  v.note("SU1: max-weight " + fmt(m1) + " vs proposed-idling " + fmt(a1) + "; max-weight SU2 " + fmt(m2));
  if (!(m1 > a1)) v.fail("max-weight SU1 delay does not exceed proposed-idling SU1 delay");
  if (!(m2 < m1)) v.fail("max-weight SU2 delay is not below its SU1 delay");
  return v;
}

// 5. Engine against the brute-force recursion on random small instances.
Verdict oracle_equivalence() {
  Verdict v;
  RandomStream meta(20240601);
  std::int64_t slots_checked = 0;
  for (int inst = 0; inst < 100; ++inst) {
    SimConfig c;
    const auto n = 1 + static_cast<std::size_t>(meta.uniform() * 3);
    testing::ReferenceParams p;
    for (std::size_t i = 0; i < n; ++i) {
      SuConfig su;
      if (meta.uniform() < 0.5) {
        su.arrivals = ArrivalProcess::bernoulli(meta.uniform());
      } else {
        const int cap = 1 + static_cast<int>(meta.uniform() * 3);
        su.arrivals = ArrivalProcess::truncated_poisson(cap * meta.uniform(), cap);
      }
      su.delay_bound = 0.5 + 6.0 * meta.uniform();
      su.direct = meta.uniform() < 0.5 ? ChannelModel::deterministic(7.0 * meta.uniform())
                                       : ChannelModel::rayleigh(0.2 + 3.0 * meta.uniform());
      su.interference = meta.uniform() < 0.3 ? ChannelModel::deterministic(meta.uniform())
                                             : ChannelModel::rayleigh(0.05 + meta.uniform());
      p.delay_bound.push_back(su.delay_bound);
      c.sus.push_back(su);
    }
    c.interference_budget = 0.05 + 2.0 * meta.uniform();
    p.budget = c.interference_budget;
    const int kind = static_cast<int>(meta.uniform() * 3);
    c.scheduler.kind = kind == 0 ? SchedulerKind::ProposedIdling
                       : kind == 1 ? SchedulerKind::ProposedNonIdling
                                   : SchedulerKind::MaxWeight;
    p.rule = kind == 0 ? testing::ReferenceParams::Rule::Idling
             : kind == 1 ? testing::ReferenceParams::Rule::NonIdling
                         : testing::ReferenceParams::Rule::MaxWeight;
    const bool literal = meta.uniform() < 0.3;
    c.scheduler.phi_mode = literal ? PhiRateMode::LiteralRate : PhiRateMode::ActualDepartures;
    p.literal_rate = literal;
    c.seed = meta.next_u64();
    const std::int64_t horizon = 1 + static_cast<std::int64_t>(meta.uniform() * 200);
    c.max_slots = horizon;
    c.check_interval = horizon;

    testing::ReferenceSim ref(p);
    Simulation sim(c);
    std::string mismatch;
    sim.set_observer([&](const SlotRecord& r) {
      if (!mismatch.empty()) return;
      const std::vector<int> a(r.arrivals.begin(), r.arrivals.end());
      ref.step(a, r.sample->direct, r.sample->interference);
      ++slots_checked;
      if (std::bit_cast<std::uint64_t>(ref.x()) != std::bit_cast<std::uint64_t>(r.x)) {
        mismatch = "X at slot " + std::to_string(r.slot);
      }
      for (std::size_t i = 0; i < n && mismatch.empty(); ++i) {
        if (ref.q(i) != static_cast<std::int64_t>(r.sus[i].queue.backlog())) {
          mismatch = "Q" + std::to_string(i + 1) + " at slot " + std::to_string(r.slot);
        } else if (std::bit_cast<std::uint64_t>(ref.y(i)) !=
                   std::bit_cast<std::uint64_t>(r.sus[i].delay.value())) {
          mismatch = "Y" + std::to_string(i + 1) + " at slot " + std::to_string(r.slot);
        }
      }
    });
    for (std::int64_t t = 0; t < horizon; ++t) sim.run_slot();
    if (!mismatch.empty()) v.fail("instance " + std::to_string(inst) + ": " + mismatch);
  }
  v.note("100 instances, " + std::to_string(slots_checked) + " slots compared bit for bit");
  return v;
}

// 6. Debug-mode Psi enumeration on every decision.
Verdict psi_consistency(const ExperimentSpec& t1, const ExperimentSpec& bind) {
  Verdict v;
  std::int64_t total = 0;
  for (const auto* spec : {&t1, &bind}) {
    for (auto kind : {SchedulerKind::ProposedIdling, SchedulerKind::ProposedNonIdling}) {
      auto c = point_config(*spec, kind, 0.4, 1);
      c.verify_psi = true;
      c.series_stride = 0;
      Simulation sim(c);
      try {
        for (int t = 0; t < 20000; ++t) sim.run_slot();
      } catch (const std::logic_error& e) {
        v.fail(std::string(to_string(kind)) + ": " + e.what());
      }
      total += sim.slots_run();
    }
  }
  v.note(std::to_string(total) + " decisions checked against brute-force enumeration");
  if (total < 10000) v.fail("fewer than 10^4 slots checked");
  return v;
}

// 7. Drift bound and Jensen check on converged table1 runs.
Verdict drift_check(const SweepOutput& t1) {
  Verdict v;
  int checked = 0;
  int failed = 0;
  for (const auto& r : t1.rows) {
    if (!r.converged) continue;
    const auto& res = t1.results.at(Key{r.scheduler, r.lambda, r.seed});
    if (!res.drift) {
      v.fail(label(r) + ": no diagnostics");
      continue;
    }
    ++checked;
    const auto& d = *res.drift;
    std::string why;
    if (!d.drift_within_bound()) why += " mean drift " + fmt(d.mean_drift) + " > C " + fmt(d.c);
    for (std::size_t i = 0; i < d.queue_over_t.size(); ++i) {
      if (d.queue_over_t[i] > d.jensen_bound) {
        why += " Q" + std::to_string(i + 1) + "(T)/T " + fmt(d.queue_over_t[i]) + " > sqrt(C/T) " +
               fmt(d.jensen_bound);
      }
    }
    if (!why.empty()) {
      ++failed;
      v.fail(label(r) + " T=" + std::to_string(r.slots) + ":" + why);
    }
  }
  v.note(std::to_string(checked) + " converged runs checked, " + std::to_string(failed) + " violate");
  return v;
}

// 8. Byte-identical outputs across two full sweeps.
Verdict determinism(const SweepOutput& first, const ExperimentSpec& spec) {
  Verdict v;
  const auto dir = scratch("determinism");
  run_and_export(spec, dir);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(first.dir)) {
    const auto name = entry.path().filename();
    if (!fs::exists(dir / name)) {
      v.fail(name.string() + " missing in second run");
      continue;
    }
    ++compared;
    if (slurp(entry.path()) != slurp(dir / name)) v.fail(name.string() + " differs");
  }
  v.note(std::to_string(compared) + " output files compared");
  fs::remove_all(dir);
  return v;
}

// 9. Sample means of the random inputs.
Verdict statistical_sanity() {
  Verdict v;
  constexpr int kDraws = 1'000'000;
  auto check = [&](const std::string& what, double got, double want, double sd) {
    const double se = sd / std::sqrt(static_cast<double>(kDraws));
    const bool ok = std::abs(got - want) <= 3.0 * se;
    v.details.push_back(std::string(ok ? "" : "FAIL ") + what + ": " + fmt(got, 6) + " vs " + fmt(want, 6) +
                   " (3 se = " + fmt(3.0 * se, 3) + ")");
    if (!ok) v.pass = false;
  };

  ChannelSampler sampler({{ChannelModel::deterministic(1.0), ChannelModel::rayleigh(0.4)},
                          {ChannelModel::deterministic(1.0), ChannelModel::rayleigh(0.2)}},
                         1);
  double g0 = 0.0;
  double g1 = 0.0;
  double gamma = 0.0;
  ChannelSample s;
  for (int k = 0; k < kDraws; ++k) {
    sampler.sample_slot_into(s);
    g0 += s.interference[0];
    g1 += s.interference[1];
    gamma += s.direct[0];
  }
  check("interference SU1", g0 / kDraws, 0.4, 0.4);
  check("interference SU2", g1 / kDraws, 0.2, 0.2);
  if (gamma != kDraws) v.fail("deterministic direct gain drifted");

  for (double lambda : {0.02, 0.3, 0.4}) {
    auto rng = RandomStream::derived(1, 0, StreamPurpose::Arrivals);
    const auto proc = ArrivalProcess::bernoulli(lambda);
    std::int64_t sum = 0;
    for (int k = 0; k < kDraws; ++k) sum += proc.draw(rng);
    check("bernoulli " + fmt(lambda), static_cast<double>(sum) / kDraws, lambda,
          std::sqrt(lambda * (1.0 - lambda)));
  }

  // Truncated Poisson(0.3) on {0..4}, moments by direct summation.
  double w[5];
  double z = 0.0;
  double term = 1.0;
  for (int k = 0; k <= 4; ++k) {
    if (k > 0) term *= 0.3 / k;
    w[k] = term;
    z += term;
  }
  double m1 = 0.0;
  double m2 = 0.0;
  for (int k = 0; k <= 4; ++k) {
    m1 += k * w[k] / z;
    m2 += k * k * w[k] / z;
  }
  RandomStream rng(5);
  const auto proc = ArrivalProcess::truncated_poisson(0.3, 4);
  std::int64_t sum = 0;
  for (int k = 0; k < kDraws; ++k) sum += proc.draw(rng);
  check("truncated poisson 0.3 cap 4", static_cast<double>(sum) / kDraws, m1, std::sqrt(m2 - m1 * m1));
  return v;
}

}  // namespace

int main() {
  try {
    auto t1_spec = load_spec(kConfigDir / "table1.cfg");
    auto bind_spec = load_spec(kConfigDir / "binding_interference.cfg");

    const auto t1 = run_and_export(t1_spec, scratch("table1"));
    auto bind_point = bind_spec;
    bind_point.lambda_grid = {0.4};
    const auto bind = run_and_export(bind_point, scratch("binding"));

    report(1, "delay and interference constraints, proposed-idling, table1 config", constraint_satisfaction(t1));
    report(2, "stability metric recomputed from exported terminals", stability_from_export({&t1, &bind}));
    report(3, "binding interference budget at lambda=0.4", binding_regime(bind));
    report(4, "delay ordering at lambda=0.4, table1 config", delay_ordering(t1));
    report(5, "oracle equivalence on random instances", oracle_equivalence());
    report(6, "decisions equal brute-force Psi minimizer", psi_consistency(t1_spec, bind_spec));
    report(7, "drift bound and Q(T)/T <= sqrt(C/T) on converged table1 runs", drift_check(t1));
    report(8, "byte-identical outputs across two full table1 sweeps", determinism(t1, t1_spec));
    report(9, "input sample means within 3 standard errors", statistical_sanity());

    fs::remove_all(t1.dir);
    fs::remove_all(bind.dir);
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance suite aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
