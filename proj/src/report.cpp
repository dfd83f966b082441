#include "crsched/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace crsched {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw std::runtime_error("cannot format double");
  }
  return std::string(buf.data(), ptr);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xF]);
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace {

std::string sanitize_note(std::string note) {
  std::replace(note.begin(), note.end(), ',', ';');
  std::replace(note.begin(), note.end(), '\n', ' ');
  std::replace(note.begin(), note.end(), '\r', ' ');
  return note;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

template <typename T>
T parse_cell(const std::string& cell, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw std::runtime_error(std::string("rows csv: bad value in column ") + column + ": '" +
                             cell + "'");
  }
  return value;
}

std::vector<std::string> row_header(std::size_t n_sus) {
  std::vector<std::string> h = {"scheduler",        "lambda",           "seed",
                                "converged",        "slots",            "stability_metric",
                                "interference_avg", "terminal_x"};
  for (std::size_t i = 1; i <= n_sus; ++i) {
    const std::string p = "su" + std::to_string(i) + "_";
    h.push_back(p + "delay");
    h.push_back(p + "departed");
    h.push_back(p + "terminal_q");
    h.push_back(p + "terminal_y");
  }
  h.push_back("note");
  return h;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out.push_back(',');
    out += cells[i];
  }
  return out;
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                    std::string_view config_sha256, std::string_view settings) {
  const std::size_t n = rows.empty() ? 0 : rows.front().average_delay.size();
  out << "# schema=" << kRowsSchema
      << " config_sha256=" << (config_sha256.empty() ? "none" : config_sha256) << '\n';
  out << "# settings: " << settings << '\n';
  out << join(row_header(n)) << '\n';
  for (const auto& r : rows) {
    if (r.average_delay.size() != n) {
      throw std::invalid_argument("rows csv: rows disagree on the number of SUs");
    }
    std::vector<std::string> cells = {std::string(to_string(r.scheduler)),
                                      format_double(r.lambda),
                                      std::to_string(r.seed),
                                      r.converged ? "1" : "0",
                                      std::to_string(r.slots),
                                      format_double(r.stability_metric),
                                      format_double(r.interference_average),
                                      format_double(r.terminal_x)};
    for (std::size_t i = 0; i < n; ++i) {
      cells.push_back(optional_cell(r.average_delay[i]));
      cells.push_back(std::to_string(r.departed[i]));
      cells.push_back(std::to_string(r.terminal_q[i]));
      cells.push_back(format_double(r.terminal_y[i]));
    }
    cells.push_back(sanitize_note(r.note));
    out << join(cells) << '\n';
  }
}

RowsFile read_rows_csv(std::istream& in) {
  RowsFile file;
  std::string line;
  std::optional<std::size_t> n_sus;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream is(line.substr(1));
      std::string token;
      if (line.rfind("# settings: ", 0) == 0) {
        file.settings = line.substr(12);
        continue;
      }
      while (is >> token) {
        if (token.rfind("schema=", 0) == 0 && token.substr(7) != kRowsSchema) {
          throw std::runtime_error("rows csv: unsupported schema " + token.substr(7));
        }
        if (token.rfind("config_sha256=", 0) == 0) {
          file.config_sha256 = token.substr(14);
          if (file.config_sha256 == "none") file.config_sha256.clear();
        }
      }
      continue;
    }
    const auto cells = split_csv_line(line);
    if (!n_sus) {
      if (cells.size() < 9 || (cells.size() - 9) % 4 != 0 || cells != row_header((cells.size() - 9) / 4)) {
        throw std::runtime_error("rows csv: unexpected header");
      }
      n_sus = (cells.size() - 9) / 4;
      continue;
    }
    if (cells.size() != 9 + 4 * *n_sus) {
      throw std::runtime_error("rows csv: wrong number of columns");
    }
    SweepRow r;
    const auto kind = parse_scheduler_kind(cells[0]);
    if (!kind) throw std::runtime_error("rows csv: unknown scheduler " + cells[0]);
    r.scheduler = *kind;
    r.lambda = parse_cell<double>(cells[1], "lambda");
    r.seed = parse_cell<std::uint64_t>(cells[2], "seed");
    r.converged = cells[3] == "1";
    r.slots = parse_cell<std::int64_t>(cells[4], "slots");
    r.stability_metric = parse_cell<double>(cells[5], "stability_metric");
    r.interference_average = parse_cell<double>(cells[6], "interference_avg");
    r.terminal_x = parse_cell<double>(cells[7], "terminal_x");
    for (std::size_t i = 0; i < *n_sus; ++i) {
      const std::size_t base = 8 + 4 * i;
      r.average_delay.push_back(cells[base].empty()
                                    ? std::nullopt
                                    : std::optional(parse_cell<double>(cells[base], "delay")));
      r.departed.push_back(parse_cell<std::int64_t>(cells[base + 1], "departed"));
      r.terminal_q.push_back(parse_cell<std::int64_t>(cells[base + 2], "terminal_q"));
      r.terminal_y.push_back(parse_cell<double>(cells[base + 3], "terminal_y"));
    }
    r.note = cells.back();
    file.rows.push_back(std::move(r));
  }
  if (!n_sus) {
    throw std::runtime_error("rows csv: missing header");
  }
  return file;
}

void write_series_csv(std::ostream& out, const MetricsLedger& ledger) {
  const std::size_t n = ledger.terminal_q.size();
  out << "slot,x";
  for (std::size_t i = 1; i <= n; ++i) out << ",q" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",y" << i;
  out << '\n';
  for (const auto& p : ledger.series) {
    out << p.slot << ',' << format_double(p.x);
    for (auto q : p.q) out << ',' << q;
    for (double y : p.y) out << ',' << format_double(y);
    out << '\n';
  }
}

namespace {

/// Seed-averaged values of one (scheduler, lambda) point.
struct PointAverage {
  std::vector<std::optional<double>> delay;
  double interference = 0.0;
};

using Curve = std::map<double, PointAverage>;

Curve average_curve(const std::vector<SweepRow>& rows, SchedulerKind kind, std::size_t n_sus) {
  struct Acc {
    std::vector<double> delay_sum;
    std::vector<int> delay_count;
    double interference_sum = 0.0;
    int count = 0;
  };
  std::map<double, Acc> acc;
  for (const auto& r : rows) {
    if (r.scheduler != kind) continue;
    auto& a = acc[r.lambda];
    a.delay_sum.resize(n_sus, 0.0);
    a.delay_count.resize(n_sus, 0);
    for (std::size_t i = 0; i < n_sus; ++i) {
      if (r.average_delay[i]) {
        a.delay_sum[i] += *r.average_delay[i];
        ++a.delay_count[i];
      }
    }
    a.interference_sum += r.interference_average;
    ++a.count;
  }
  Curve curve;
  for (const auto& [lambda, a] : acc) {
    PointAverage p;
    for (std::size_t i = 0; i < n_sus; ++i) {
      p.delay.push_back(a.delay_count[i] ? std::optional(a.delay_sum[i] / a.delay_count[i])
                                         : std::nullopt);
    }
    p.interference = a.interference_sum / a.count;
    curve.emplace(lambda, std::move(p));
  }
  return curve;
}

struct FigureDef {
  const char* file;
  const char* title;
  SchedulerKind primary;
  const char* primary_prefix;
  bool delay;  // per-SU delay columns, otherwise one interference column
};

constexpr FigureDef kFigures[] = {
    {"fig1.csv", "Average delay per SU, non-idling variant vs Max-Weight",
     SchedulerKind::ProposedNonIdling, "nonidle", true},
    {"fig2.csv", "Average PU interference, non-idling variant vs Max-Weight",
     SchedulerKind::ProposedNonIdling, "nonidle", false},
    {"fig3.csv", "Average delay per SU, proposed (idling) vs Max-Weight",
     SchedulerKind::ProposedIdling, "alg1", true},
    {"fig4.csv", "Average PU interference, proposed (idling) vs Max-Weight",
     SchedulerKind::ProposedIdling, "alg1", false},
};

}  // namespace

std::vector<FigureOutcome> emit_figures(const std::vector<SweepRow>& rows,
                                        const std::filesystem::path& output_dir,
                                        std::string_view config_sha256,
                                        std::string_view settings) {
  if (rows.empty()) {
    throw std::invalid_argument("no rows to plot");
  }
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + output_dir.string() + ": " +
                             ec.message());
  }
  const std::size_t n = rows.front().average_delay.size();
  auto open = [&](const std::string& name) {
    std::ofstream f(output_dir / name, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw std::runtime_error("cannot write " + (output_dir / name).string());
    }
    return f;
  };

  const Curve mw = average_curve(rows, SchedulerKind::MaxWeight, n);
  std::vector<FigureOutcome> outcomes;
  nlohmann::json figures = nlohmann::json::object();
  std::ostringstream plot;
  plot << "# gnuplot script generated alongside the figure CSVs\n"
       << "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo\n";

  for (const auto& def : kFigures) {
    FigureOutcome outcome{def.file, false, {}};
    const Curve primary = average_curve(rows, def.primary, n);
    if (primary.empty()) {
      outcome.reason = "no " + std::string(to_string(def.primary)) + " rows";
      figures[def.file] = {{"status", "omitted"}, {"reason", outcome.reason}};
      outcomes.push_back(outcome);
      continue;
    }

    std::vector<std::string> header = {"lambda"};
    auto add_series = [&](const std::string& prefix) {
      if (def.delay) {
        for (std::size_t i = 1; i <= n; ++i) {
          header.push_back(prefix + "_su" + std::to_string(i) + "_delay");
        }
      } else {
        header.push_back(prefix + "_interference");
      }
    };
    add_series(def.primary_prefix);
    if (!mw.empty()) add_series("mw");

    std::map<double, bool> lambdas;
    for (const auto& [l, p] : primary) lambdas[l] = true;
    for (const auto& [l, p] : mw) lambdas[l] = true;

    auto f = open(def.file);
    f << join(header) << '\n';
    auto emit_point = [&](const Curve& curve, double lambda) {
      const auto it = curve.find(lambda);
      if (def.delay) {
        for (std::size_t i = 0; i < n; ++i) {
          f << ',' << (it == curve.end() ? std::string() : optional_cell(it->second.delay[i]));
        }
      } else {
        f << ',' << (it == curve.end() ? std::string() : format_double(it->second.interference));
      }
    };
    for (const auto& [lambda, unused] : lambdas) {
      f << format_double(lambda);
      emit_point(primary, lambda);
      if (!mw.empty()) emit_point(mw, lambda);
      f << '\n';
    }
    if (!f) {
      throw std::runtime_error(std::string("failed writing ") + def.file);
    }
    outcome.written = true;
    figures[def.file] = {{"status", "written"},
                         {"series", std::vector<std::string>(header.begin() + 1, header.end())}};

    const std::string stem = std::string(def.file).substr(0, 4);
    plot << "\nset output '" << stem << ".png'\nset title '" << def.title << "'\n"
         << "set xlabel 'lambda (packets/slot)'\nset ylabel '"
         << (def.delay ? "average delay (slots)" : "average interference") << "'\n"
         << "plot for [c=2:" << header.size() << "] '" << def.file
         << "' using 1:c with linespoints\n";
    outcomes.push_back(outcome);
  }

  std::vector<std::uint64_t> seeds;
  std::vector<std::string> schedulers;
  for (const auto& r : rows) {
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
    const std::string k(to_string(r.scheduler));
    if (std::find(schedulers.begin(), schedulers.end(), k) == schedulers.end()) {
      schedulers.push_back(k);
    }
  }
  nlohmann::json manifest = {
      {"schema", kFiguresSchema},
      {"config_sha256", std::string(config_sha256)},
      {"settings", std::string(settings)},
      {"seeds", seeds},
      {"schedulers", schedulers},
      {"row_count", rows.size()},
      {"figures", figures},
  };
  open("manifest.json") << manifest.dump(2) << '\n';
  open("plot.gp") << plot.str();
  return outcomes;
}

}  // namespace crsched
