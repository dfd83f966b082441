#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "crsched/engine.hpp"
#include "crsched/experiment.hpp"

namespace crsched {

/// Schema tags written into every output so readers can reject old files.
inline constexpr std::string_view kRowsSchema = "crsched-rows/1";
inline constexpr std::string_view kFiguresSchema = "crsched-figures/1";

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct RowsFile {
  std::vector<SweepRow> rows;
  std::string config_sha256;
  std::string settings;
};

/// Rows CSV: two '#' metadata lines (schema + config hash, settings), a header,
/// then one line per row. Column layout in docs/csv_schema.md.
void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                    std::string_view config_sha256, std::string_view settings);

/// Inverse of write_rows_csv. Throws std::runtime_error on malformed input.
RowsFile read_rows_csv(std::istream& in);

/// Decimated Q/Y/X trajectory of one run.
void write_series_csv(std::ostream& out, const MetricsLedger& ledger);

struct FigureOutcome {
  std::string file;    // e.g. "fig3.csv"
  bool written = false;
  std::string reason;  // why it was omitted
};

/// Writes fig1.csv..fig4.csv, plot.gp and manifest.json into `output_dir`.
///   fig1: per-SU delay vs lambda, non-idling variant (+ Max-Weight if present)
///   fig2: interference vs lambda, non-idling variant (+ Max-Weight)
///   fig3: per-SU delay vs lambda, proposed idling (+ Max-Weight)
///   fig4: interference vs lambda, proposed idling (+ Max-Weight)
/// A figure is omitted (and noted in the manifest) when its main scheduler has
/// no rows. Values are averaged over seeds; undefined delays are left empty.
/// Throws std::runtime_error if the directory cannot be written.
std::vector<FigureOutcome> emit_figures(const std::vector<SweepRow>& rows,
                                        const std::filesystem::path& output_dir,
                                        std::string_view config_sha256,
                                        std::string_view settings);

}  // namespace crsched
