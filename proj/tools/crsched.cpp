// crsched: run scheduling sweeps and turn their rows into figure data.
//
//   crsched run --config configs/table1.cfg [--schedulers a,b] [--seed 1,2] ...
//   crsched figures --rows results/rows.csv --out plots/

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crsched/experiment.hpp"
#include "crsched/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAborted = 2;

struct RunOptions {
  std::string config;
  std::vector<std::string> schedulers;
  std::optional<double> lambda_min;
  std::optional<double> lambda_max;
  std::optional<double> lambda_step;
  std::vector<std::uint64_t> seeds;
  std::optional<std::int64_t> max_slots;
  std::optional<double> epsilon;
  std::optional<std::string> phi_mode;
  std::optional<std::string> out;
  unsigned jobs = 0;
  bool ensemble = false;
  bool trace = false;
  bool verify_psi = false;
  bool print_config = false;
  bool quiet = false;
};

void apply_overrides(const RunOptions& o, crsched::ExperimentSpec& spec) {
  if (!o.schedulers.empty()) {
    spec.schedulers.clear();
    for (const auto& name : o.schedulers) {
      const auto kind = crsched::parse_scheduler_kind(name);
      if (!kind) {
        throw std::invalid_argument("unknown scheduler '" + name + "'");
      }
      spec.schedulers.push_back(*kind);
    }
  }
  if (o.lambda_min || o.lambda_max || o.lambda_step) {
    const auto& g = spec.lambda_grid;
    const double step = o.lambda_step.value_or(g.size() > 1 ? g[1] - g[0] : 0.02);
    spec.lambda_grid = crsched::make_lambda_grid(o.lambda_min.value_or(g.front()),
                                                 o.lambda_max.value_or(g.back()), step);
  }
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  if (o.max_slots) {
    spec.base.max_slots = *o.max_slots;
    spec.base.check_interval = std::min(spec.base.check_interval, *o.max_slots);
  }
  if (o.epsilon) spec.base.epsilon = *o.epsilon;
  if (o.phi_mode) {
    const auto mode = crsched::parse_phi_mode(*o.phi_mode);
    if (!mode) throw std::invalid_argument("phi mode must be 'actual' or 'literal'");
    spec.base.scheduler.phi_mode = *mode;
  }
  if (o.ensemble) spec.ensemble = true;
  if (o.verify_psi) spec.base.verify_psi = true;

  if (o.out) {
    spec.output_dir = *o.out;
  } else if (const char* env = std::getenv("CRSCHED_OUT"); env != nullptr && *env != '\0') {
    spec.output_dir = env;
  }
  spec.validate();
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << *v;
  return os.str();
}

int run_command(const RunOptions& o) {
  crsched::ExperimentSpec spec;
  try {
    spec = crsched::load_spec(o.config);
    apply_overrides(o, spec);
  } catch (const crsched::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid options: " << e.what() << '\n';
    return kExitUsage;
  }

  if (o.print_config) {
    std::cout << crsched::describe(spec);
    return kExitOk;
  }

  std::error_code ec;
  std::filesystem::create_directories(spec.output_dir, ec);
  if (ec) {
    std::cerr << "cannot create " << spec.output_dir << ": " << ec.message() << '\n';
    return kExitUsage;
  }

  std::mutex io;
  crsched::SweepOptions options;
  options.jobs = o.jobs;
  options.on_result = [&](const crsched::SweepRow& row, const crsched::RunResult& result) {
    if (o.trace) {
      std::ostringstream name;
      name << "trace_" << crsched::to_string(row.scheduler) << "_" << crsched::format_double(row.lambda)
           << "_" << row.seed << ".csv";
      std::ofstream f(spec.output_dir / name.str(), std::ios::binary);
      crsched::write_series_csv(f, result.ledger);
    }
    if (!o.quiet) {
      std::lock_guard lock(io);
      std::cerr << "done " << crsched::to_string(row.scheduler) << " lambda="
                << crsched::format_double(row.lambda) << " seed=" << row.seed
                << " slots=" << row.slots << (row.converged ? " converged" : "")
                << (row.aborted() ? " ABORTED" : "") << '\n';
    }
  };

  const auto rows = crsched::run_sweep(spec, options);
  const std::string settings = crsched::settings_line(spec);

  {
    std::ofstream f(spec.output_dir / "rows.csv", std::ios::binary | std::ios::trunc);
    if (!f) {
      std::cerr << "cannot write rows.csv in " << spec.output_dir << '\n';
      return kExitUsage;
    }
    crsched::write_rows_csv(f, rows, spec.config_sha256, settings);
  }
  for (const auto& fig :
       crsched::emit_figures(rows, spec.output_dir, spec.config_sha256, settings)) {
    if (!fig.written && !o.quiet) {
      std::cerr << "skipped " << fig.file << ": " << fig.reason << '\n';
    }
  }

  int aborted = 0;
  std::cout << std::left << std::setw(20) << "scheduler" << std::setw(8) << "lambda"
            << std::setw(8) << "seed";
  for (std::size_t i = 1; i <= spec.base.sus.size(); ++i) {
    std::cout << std::setw(10) << ("W" + std::to_string(i));
  }
  std::cout << std::setw(10) << "I" << "conv\n";
  for (const auto& r : rows) {
    std::cout << std::setw(20) << crsched::to_string(r.scheduler) << std::setw(8)
              << crsched::format_double(r.lambda) << std::setw(8) << r.seed;
    for (const auto& d : r.average_delay) std::cout << std::setw(10) << cell(d);
    std::cout << std::setw(10) << cell(r.interference_average) << (r.converged ? "yes" : "no");
    if (r.aborted()) {
      std::cout << "  " << r.note;
      ++aborted;
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << (spec.output_dir / "rows.csv").string() << '\n';
  return aborted == 0 ? kExitOk : kExitAborted;
}

int figures_command(const std::string& rows_path, const std::string& out) {
  std::ifstream in(rows_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read " << rows_path << '\n';
    return kExitUsage;
  }
  const auto file = crsched::read_rows_csv(in);
  if (file.rows.empty()) {
    std::cerr << rows_path << " has no rows\n";
    return kExitUsage;
  }
  for (const auto& fig : crsched::emit_figures(file.rows, out, file.config_sha256, file.settings)) {
    std::cout << fig.file << ": " << (fig.written ? "written" : "omitted (" + fig.reason + ")")
              << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay- and interference-constrained cognitive-radio uplink scheduling simulator"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a lambda sweep and write rows.csv plus figure data");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--schedulers", run.schedulers,
                      "proposed-idling, proposed-nonidling, max-weight")
      ->delimiter(',');
  run_cmd->add_option("--lambda-min", run.lambda_min, "First arrival rate of the grid");
  run_cmd->add_option("--lambda-max", run.lambda_max, "Last arrival rate of the grid");
  run_cmd->add_option("--lambda-step", run.lambda_step, "Grid step");
  run_cmd->add_option("--seed", run.seeds, "Seed list")->delimiter(',');
  run_cmd->add_option("--max-slots", run.max_slots, "Slot budget per run")->check(CLI::PositiveNumber);
  run_cmd->add_option("--epsilon", run.epsilon, "Stopping threshold")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--phi-mode", run.phi_mode, "actual | literal");
  run_cmd->add_option("--out", run.out, "Output directory (overrides CRSCHED_OUT and the config)");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads (default: all cores)");
  run_cmd->add_flag("--ensemble", run.ensemble, "Stop each point on the seed-averaged metric");
  run_cmd->add_flag("--trace", run.trace, "Write per-run Q/Y/X trajectories");
  run_cmd->add_flag("--verify-psi", run.verify_psi, "Cross-check decisions by brute force");
  run_cmd->add_flag("--print-config", run.print_config, "Print the parsed config and exit");
  run_cmd->add_flag("-q,--quiet", run.quiet, "No progress output");

  std::string rows_path;
  std::string figures_out;
  auto* fig_cmd = app.add_subcommand("figures", "Regenerate figure CSVs from a rows.csv");
  fig_cmd->add_option("--rows", rows_path, "rows.csv from a previous run")->required();
  fig_cmd->add_option("--out", figures_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run_command(run);
    return figures_command(rows_path, figures_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
