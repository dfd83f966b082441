#include "crsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "crsched/report.hpp"

namespace crsched {

namespace {

std::string format_error(const std::string& source, int line, const std::string& message) {
  std::ostringstream os;
  os << source << ':' << line << ": " << message;
  return os.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(sep, start);
    const auto piece = trim(s.substr(start, end == std::string_view::npos ? s.npos : end - start));
    if (!piece.empty()) {
      out.emplace_back(piece);
    }
    if (end == std::string_view::npos) {
      break;
    }
    start = end + 1;
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  for (std::string w; is >> w;) {
    out.push_back(w);
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    return std::nullopt;
  }
  return value;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Section {
  int line = 0;
  bool used = false;
  std::map<std::string, Entry> entries;
};

/// Sectioned key = value document with usage tracking so that unknown keys
/// can be reported after all known keys were consumed.
class Document {
 public:
  Document(std::string_view text, std::string source) : source_(std::move(source)) {
    Section* current = nullptr;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;

      if (const auto hash = raw.find('#'); hash != std::string_view::npos) {
        raw = raw.substr(0, hash);
      }
      const auto line = trim(raw);
      if (line.empty()) {
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') {
          fail(ConfigError::Kind::Syntax, line_no, "unterminated section header");
        }
        const std::string name(trim(line.substr(1, line.size() - 2)));
        if (name.empty()) {
          fail(ConfigError::Kind::Syntax, line_no, "empty section name");
        }
        auto [it, inserted] = sections_.try_emplace(name);
        if (!inserted) {
          fail(ConfigError::Kind::Syntax, line_no, "duplicate section [" + name + "]");
        }
        it->second.line = line_no;
        current = &it->second;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        fail(ConfigError::Kind::Syntax, line_no, "expected 'key = value'");
      }
      if (current == nullptr) {
        fail(ConfigError::Kind::Syntax, line_no, "key outside of any section");
      }
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) {
        fail(ConfigError::Kind::Syntax, line_no, "empty key");
      }
      auto [it, inserted] =
          current->entries.try_emplace(key, Entry{std::string(trim(line.substr(eq + 1))), line_no});
      if (!inserted) {
        fail(ConfigError::Kind::Syntax, line_no, "duplicate key '" + key + "'");
      }
    }
  }

  [[noreturn]] void fail(ConfigError::Kind kind, int line, const std::string& message) const {
    throw ConfigError(kind, source_, line, message);
  }

  bool has_section(const std::string& section) const { return sections_.count(section) != 0; }

  int section_line(const std::string& section) const {
    const auto it = sections_.find(section);
    return it == sections_.end() ? 0 : it->second.line;
  }

  Entry* find(const std::string& section, const std::string& key) {
    const auto s = sections_.find(section);
    if (s == sections_.end()) {
      return nullptr;
    }
    s->second.used = true;
    const auto e = s->second.entries.find(key);
    if (e == s->second.entries.end()) {
      return nullptr;
    }
    e->second.used = true;
    return &e->second;
  }

  Entry& require(const std::string& section, const std::string& key) {
    if (!has_section(section)) {
      fail(ConfigError::Kind::MissingKey, 0, "missing section [" + section + "]");
    }
    Entry* e = find(section, key);
    if (e == nullptr) {
      fail(ConfigError::Kind::MissingKey, section_line(section),
           "missing key '" + key + "' in [" + section + "]");
    }
    return *e;
  }

  double number(const Entry& e, const std::string& key) const {
    const auto v = parse_number<double>(e.value);
    if (!v || !std::isfinite(*v)) {
      fail(ConfigError::Kind::BadValue, e.line, "'" + key + "' must be a number");
    }
    return *v;
  }

  std::int64_t integer(const Entry& e, const std::string& key) const {
    const auto v = parse_number<std::int64_t>(e.value);
    if (!v) {
      fail(ConfigError::Kind::BadValue, e.line, "'" + key + "' must be an integer");
    }
    return *v;
  }

  bool boolean(const Entry& e, const std::string& key) const {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    fail(ConfigError::Kind::BadValue, e.line, "'" + key + "' must be true or false");
  }

  void reject_unused() const {
    for (const auto& [name, section] : sections_) {
      if (!section.used) {
        fail(ConfigError::Kind::UnknownKey, section.line, "unknown section [" + name + "]");
      }
      for (const auto& [key, entry] : section.entries) {
        if (!entry.used) {
          fail(ConfigError::Kind::UnknownKey, entry.line,
               "unknown key '" + key + "' in [" + name + "]");
        }
      }
    }
  }

 private:
  std::string source_;
  std::map<std::string, Section> sections_;
};

ChannelModel parse_channel(const Document& doc, const Entry& e, const std::string& key) {
  const auto w = words(e.value);
  const bool has_cap = w.size() == 4 && w[2] == "cap";
  if (w.size() != 2 && !has_cap) {
    doc.fail(ConfigError::Kind::BadValue, e.line,
             "'" + key + "' must be '<deterministic|rayleigh> <gain> [cap <gain>]'");
  }
  const auto value = parse_number<double>(w[1]);
  std::optional<double> cap;
  if (has_cap) {
    cap = parse_number<double>(w[3]);
    if (!cap) {
      doc.fail(ConfigError::Kind::BadValue, e.line, "'" + key + "' cap must be a number");
    }
  }
  if (!value) {
    doc.fail(ConfigError::Kind::BadValue, e.line, "'" + key + "' gain must be a number");
  }
  try {
    if (w[0] == "deterministic") {
      return ChannelModel::deterministic(*value, cap);
    }
    if (w[0] == "rayleigh") {
      return ChannelModel::rayleigh(*value, cap);
    }
  } catch (const std::invalid_argument& ex) {
    doc.fail(ConfigError::Kind::OutOfRange, e.line, ex.what());
  }
  doc.fail(ConfigError::Kind::BadValue, e.line, "unknown channel model '" + w[0] + "'");
}

ArrivalProcess parse_arrivals(const Document& doc, const Entry& e) {
  const auto w = words(e.value);
  if (w.size() == 1 && w[0] == "bernoulli") {
    return ArrivalProcess::bernoulli(0.0);
  }
  if (w.size() == 2 && w[0] == "poisson") {
    const auto cap = parse_number<int>(w[1]);
    if (!cap || *cap < 1) {
      doc.fail(ConfigError::Kind::OutOfRange, e.line, "poisson arrival cap must be at least 1");
    }
    return ArrivalProcess::truncated_poisson(0.0, *cap);
  }
  doc.fail(ConfigError::Kind::BadValue, e.line, "'arrivals' must be 'bernoulli' or 'poisson <cap>'");
}

}  // namespace

ConfigError::ConfigError(Kind kind, std::string source, int line, const std::string& message)
    : std::runtime_error(format_error(source, line, message)), kind_(kind), line_(line) {}

std::vector<double> make_lambda_grid(double lambda_min, double lambda_max, double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("lambda step must be positive");
  }
  if (!(lambda_max >= lambda_min)) {
    throw std::invalid_argument("lambda max must not be below lambda min");
  }
  const auto count = static_cast<std::int64_t>(std::floor((lambda_max - lambda_min) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    grid.push_back(std::round((lambda_min + static_cast<double>(k) * step) * 1e12) / 1e12);
  }
  return grid;
}

void ExperimentSpec::validate() const {
  base.validate();
  if (lambda_grid.empty()) {
    throw std::invalid_argument("lambda grid must not be empty");
  }
  int a_max = base.sus.front().arrivals.max_arrivals();
  for (const auto& su : base.sus) {
    a_max = std::min(a_max, su.arrivals.max_arrivals());
  }
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    if (!(lambda_grid[k] >= 0.0) || lambda_grid[k] > a_max) {
      throw std::invalid_argument("lambda grid values must lie in [0, A_max]");
    }
    if (k > 0 && !(lambda_grid[k] > lambda_grid[k - 1])) {
      throw std::invalid_argument("lambda grid must be strictly increasing");
    }
  }
  if (schedulers.empty()) {
    throw std::invalid_argument("at least one scheduler is required");
  }
  if (std::set<SchedulerKind>(schedulers.begin(), schedulers.end()).size() != schedulers.size()) {
    throw std::invalid_argument("schedulers must be distinct");
  }
  if (seeds.empty()) {
    throw std::invalid_argument("at least one seed is required");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("seeds must be distinct");
  }
}

ExperimentSpec parse_spec(std::string_view text, const std::string& source) {
  Document doc(text, source);
  ExperimentSpec spec;
  using K = ConfigError::Kind;

  auto& n_entry = doc.require("system", "sus");
  const auto n = doc.integer(n_entry, "sus");
  if (n < 1) {
    doc.fail(K::OutOfRange, n_entry.line, "number of SUs must be at least 1");
  }
  auto& budget = doc.require("system", "interference_budget");
  spec.base.interference_budget = doc.number(budget, "interference_budget");
  if (!(spec.base.interference_budget > 0.0)) {
    doc.fail(K::OutOfRange, budget.line, "interference budget must be positive");
  }

  for (std::int64_t i = 1; i <= n; ++i) {
    const std::string section = "su" + std::to_string(i);
    SuConfig su;
    auto& d = doc.require(section, "delay_bound");
    su.delay_bound = doc.number(d, "delay_bound");
    if (!(su.delay_bound > 0.0)) {
      doc.fail(K::OutOfRange, d.line, "delay bound must be positive");
    }
    su.direct = parse_channel(doc, doc.require(section, "direct"), "direct");
    su.interference = parse_channel(doc, doc.require(section, "interference"), "interference");
    if (const Entry* a = doc.find(section, "arrivals")) {
      su.arrivals = parse_arrivals(doc, *a);
    }
    spec.base.sus.push_back(su);
  }

  if (const Entry* e = doc.find("run", "epsilon")) {
    spec.base.epsilon = doc.number(*e, "epsilon");
    if (spec.base.epsilon < 0.0) doc.fail(K::OutOfRange, e->line, "epsilon must be non-negative");
  }
  if (const Entry* e = doc.find("run", "max_slots")) {
    spec.base.max_slots = doc.integer(*e, "max_slots");
    if (spec.base.max_slots < 1) doc.fail(K::OutOfRange, e->line, "max_slots must be at least 1");
  }
  if (const Entry* e = doc.find("run", "check_interval")) {
    spec.base.check_interval = doc.integer(*e, "check_interval");
    if (spec.base.check_interval < 1 || spec.base.check_interval > spec.base.max_slots) {
      doc.fail(K::OutOfRange, e->line, "check_interval must lie in [1, max_slots]");
    }
  }
  if (spec.base.check_interval > spec.base.max_slots) {
    doc.fail(K::OutOfRange, doc.section_line("run"), "max_slots must be at least check_interval");
  }
  if (const Entry* e = doc.find("run", "series_stride")) {
    spec.base.series_stride = doc.integer(*e, "series_stride");
    if (spec.base.series_stride < 0) {
      doc.fail(K::OutOfRange, e->line, "series_stride must be non-negative");
    }
  }
  if (const Entry* e = doc.find("run", "buffer_cap")) {
    const auto cap = doc.integer(*e, "buffer_cap");
    if (cap < 1) doc.fail(K::OutOfRange, e->line, "buffer_cap must be at least 1");
    spec.base.buffer_cap = static_cast<std::size_t>(cap);
  }
  if (const Entry* e = doc.find("run", "phi_mode")) {
    const auto mode = parse_phi_mode(e->value);
    if (!mode) doc.fail(K::BadValue, e->line, "phi_mode must be 'actual' or 'literal'");
    spec.base.scheduler.phi_mode = *mode;
  }
  if (const Entry* e = doc.find("run", "verify_psi")) {
    spec.base.verify_psi = doc.boolean(*e, "verify_psi");
  }

  auto& sched = doc.require("sweep", "schedulers");
  for (const auto& name : split(sched.value, ',')) {
    const auto kind = parse_scheduler_kind(name);
    if (!kind) {
      doc.fail(K::UnknownScheduler, sched.line, "unknown scheduler '" + name + "'");
    }
    if (std::find(spec.schedulers.begin(), spec.schedulers.end(), *kind) != spec.schedulers.end()) {
      doc.fail(K::BadValue, sched.line, "scheduler '" + name + "' listed twice");
    }
    spec.schedulers.push_back(*kind);
  }
  if (spec.schedulers.empty()) {
    doc.fail(K::OutOfRange, sched.line, "at least one scheduler is required");
  }

  int lambda_line = 0;
  if (Entry* list = doc.find("sweep", "lambdas")) {
    lambda_line = list->line;
    for (const auto& item : split(list->value, ',')) {
      const auto v = parse_number<double>(item);
      if (!v) doc.fail(K::BadValue, list->line, "lambda '" + item + "' is not a number");
      spec.lambda_grid.push_back(*v);
    }
    for (const char* key : {"lambda_min", "lambda_max", "lambda_step"}) {
      if (const Entry* e = doc.find("sweep", key)) {
        doc.fail(K::BadValue, e->line, "'lambdas' and '" + std::string(key) + "' are exclusive");
      }
    }
  } else {
    auto& lo = doc.require("sweep", "lambda_min");
    auto& hi = doc.require("sweep", "lambda_max");
    double step = 0.02;
    lambda_line = hi.line;
    if (const Entry* e = doc.find("sweep", "lambda_step")) {
      step = doc.number(*e, "lambda_step");
      if (!(step > 0.0)) doc.fail(K::OutOfRange, e->line, "lambda_step must be positive");
    }
    const double a = doc.number(lo, "lambda_min");
    const double b = doc.number(hi, "lambda_max");
    if (b < a) doc.fail(K::OutOfRange, hi.line, "lambda_max must not be below lambda_min");
    spec.lambda_grid = make_lambda_grid(a, b, step);
  }
  if (spec.lambda_grid.empty()) {
    doc.fail(K::OutOfRange, lambda_line, "lambda grid must not be empty");
  }

  auto& seeds = doc.require("sweep", "seeds");
  for (const auto& item : split(seeds.value, ',')) {
    const auto v = parse_number<std::uint64_t>(item);
    if (!v) doc.fail(K::BadValue, seeds.line, "seed '" + item + "' is not an unsigned integer");
    if (std::find(spec.seeds.begin(), spec.seeds.end(), *v) != spec.seeds.end()) {
      doc.fail(K::BadValue, seeds.line, "seed " + item + " listed twice");
    }
    spec.seeds.push_back(*v);
  }
  if (spec.seeds.empty()) {
    doc.fail(K::OutOfRange, seeds.line, "at least one seed is required");
  }
  if (const Entry* e = doc.find("sweep", "output_dir")) {
    spec.output_dir = e->value;
  }
  if (const Entry* e = doc.find("sweep", "ensemble")) {
    spec.ensemble = doc.boolean(*e, "ensemble");
  }

  doc.reject_unused();

  try {
    spec.validate();
  } catch (const std::invalid_argument& ex) {
    doc.fail(K::OutOfRange, lambda_line, ex.what());
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(ConfigError::Kind::Syntax, path.string(), 0, "cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  ExperimentSpec spec = parse_spec(text, path.string());
  spec.config_sha256 = sha256_hex(text);
  return spec;
}

std::string describe(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "sus: " << spec.base.sus.size() << '\n';
  os << "interference_budget: " << format_double(spec.base.interference_budget) << '\n';
  for (std::size_t i = 0; i < spec.base.sus.size(); ++i) {
    const auto& su = spec.base.sus[i];
    os << "su" << i + 1 << ": delay_bound " << format_double(su.delay_bound) << "; direct "
       << su.direct.describe() << "; interference " << su.interference.describe()
       << "; arrivals " << (su.arrivals.kind() == ArrivalProcess::Kind::Bernoulli
                                ? std::string("bernoulli")
                                : "poisson cap " + std::to_string(su.arrivals.max_arrivals()))
       << '\n';
  }
  os << "schedulers:";
  for (auto k : spec.schedulers) os << ' ' << to_string(k);
  os << '\n' << "lambda_grid:";
  for (double l : spec.lambda_grid) os << ' ' << format_double(l);
  os << '\n' << "seeds:";
  for (auto s : spec.seeds) os << ' ' << s;
  os << '\n' << settings_line(spec) << '\n';
  return os.str();
}

std::string settings_line(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "epsilon=" << format_double(spec.base.epsilon) << " max_slots=" << spec.base.max_slots
     << " check_interval=" << spec.base.check_interval
     << " phi_mode=" << to_string(spec.base.scheduler.phi_mode)
     << " buffer_cap=" << spec.base.buffer_cap << " ensemble=" << (spec.ensemble ? "true" : "false");
  return os.str();
}

SimConfig point_config(const ExperimentSpec& spec, SchedulerKind scheduler, double lambda,
                       std::uint64_t seed) {
  SimConfig c = spec.base;
  c.scheduler.kind = scheduler;
  c.seed = seed;
  for (auto& su : c.sus) {
    su.arrivals = su.arrivals.with_rate(lambda);
  }
  return c;
}

SweepRow make_row(SchedulerKind scheduler, double lambda, std::uint64_t seed,
                  const RunResult& result) {
  SweepRow row;
  row.scheduler = scheduler;
  row.lambda = lambda;
  row.seed = seed;
  row.converged = result.converged;
  row.slots = result.slots;
  row.stability_metric = result.stability_metric;
  row.interference_average = result.interference_average;
  row.terminal_x = result.ledger.terminal_x;
  row.average_delay = result.average_delay;
  row.departed = result.ledger.departed;
  row.terminal_q = result.ledger.terminal_q;
  row.terminal_y = result.ledger.terminal_y;
  if (result.abort_reason) {
    row.note = *result.abort_reason;
  }
  return row;
}

std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, const SweepOptions& options) {
  spec.validate();

  struct Task {
    SchedulerKind scheduler;
    double lambda;
    std::vector<std::uint64_t> seeds;
  };
  std::vector<Task> tasks;
  for (auto kind : spec.schedulers) {
    for (double lambda : spec.lambda_grid) {
      if (spec.ensemble) {
        tasks.push_back({kind, lambda, spec.seeds});
      } else {
        for (auto seed : spec.seeds) {
          tasks.push_back({kind, lambda, {seed}});
        }
      }
    }
  }

  std::vector<std::vector<SweepRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      try {
        std::vector<RunResult> runs;
        const SimConfig config = point_config(spec, task.scheduler, task.lambda, task.seeds.front());
        if (spec.ensemble) {
          runs = run_ensemble_until_converged(config, task.seeds);
        } else {
          runs.push_back(run_until_converged(config));
        }
        for (std::size_t k = 0; k < runs.size(); ++k) {
          results[t].push_back(make_row(task.scheduler, task.lambda, task.seeds[k], runs[k]));
          if (options.on_result) {
            options.on_result(results[t].back(), runs[k]);
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next = tasks.size();
      }
    }
  };

  unsigned jobs = options.jobs != 0 ? options.jobs : std::thread::hardware_concurrency();
  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  std::vector<SweepRow> rows;
  for (auto& r : results) {
    std::move(r.begin(), r.end(), std::back_inserter(rows));
  }
  return rows;
}

}  // namespace crsched
