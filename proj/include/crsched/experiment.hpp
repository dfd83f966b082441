#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crsched/engine.hpp"
#include "crsched/scheduler.hpp"

namespace crsched {

/// A rejected experiment config. what() reads "<source>:<line>: <message>";
/// line is 0 when the problem is not tied to one line (e.g. a missing section).
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Syntax, MissingKey, UnknownKey, BadValue, OutOfRange, UnknownScheduler };

  ConfigError(Kind kind, std::string source, int line, const std::string& message);

  Kind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }

 private:
  Kind kind_;
  int line_;
};

struct ExperimentSpec {
  /// Base configuration; every SU's arrival rate is replaced by the grid value.
  SimConfig base;
  std::vector<double> lambda_grid;
  std::vector<SchedulerKind> schedulers;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "results";
  /// Run each (scheduler, lambda) point's seeds as a lockstep ensemble.
  bool ensemble = false;
  /// SHA-256 of the config file bytes (empty for specs not loaded from a file).
  std::string config_sha256;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

/// Parses the sectioned key = value format described in docs/config_format.md.
ExperimentSpec parse_spec(std::string_view text, const std::string& source = "<config>");

/// Reads, parses and hashes a config file.
ExperimentSpec load_spec(const std::filesystem::path& path);

/// lambda_min, lambda_min + step, ... up to lambda_max inclusive, rounded to
/// 12 decimals so grid points print cleanly.
std::vector<double> make_lambda_grid(double lambda_min, double lambda_max, double step);

/// Human-readable echo of a parsed spec.
std::string describe(const ExperimentSpec& spec);

/// Effective run settings as "key=value" tokens, recorded next to outputs.
std::string settings_line(const ExperimentSpec& spec);

/// One (scheduler, lambda, seed) outcome.
struct SweepRow {
  SchedulerKind scheduler = SchedulerKind::ProposedIdling;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::int64_t slots = 0;
  double stability_metric = 0.0;
  double interference_average = 0.0;
  double terminal_x = 0.0;
  std::vector<std::optional<double>> average_delay;
  std::vector<std::int64_t> departed;
  std::vector<std::int64_t> terminal_q;
  std::vector<double> terminal_y;
  /// Empty, or the abort diagnostic of a run that hit the buffer cap.
  std::string note;

  bool aborted() const noexcept { return !note.empty(); }
};

SweepRow make_row(SchedulerKind scheduler, double lambda, std::uint64_t seed,
                  const RunResult& result);

/// SimConfig for one sweep point.
SimConfig point_config(const ExperimentSpec& spec, SchedulerKind scheduler, double lambda,
                       std::uint64_t seed);

struct SweepOptions {
  /// Worker threads; 0 means std::thread::hardware_concurrency().
  unsigned jobs = 0;
  /// Called once per run, possibly from a worker thread.
  std::function<void(const SweepRow&, const RunResult&)> on_result;
};

/// Runs every (scheduler, lambda, seed) point. Rows come back ordered by
/// scheduler (config order), then lambda, then seed (config order), whatever the
/// number of jobs. Buffer-cap aborts are recorded in the row's note.
std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, const SweepOptions& options = {});

}  // namespace crsched
