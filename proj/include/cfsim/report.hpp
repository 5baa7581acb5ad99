#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfsim/harness.hpp"

namespace cfsim {

/// Column names of the results CSV, in emission order.
const std::vector<std::string>& csv_columns();

/// One row per cell. Numbers use the shortest representation that parses
/// back to the same double; absent values are empty fields. Aborted cells
/// are only written when allow_partial is set.
void write_csv(const GridReport& report, std::ostream& out, bool allow_partial = false);
void emit_csv(const GridReport& report, const std::filesystem::path& path,
              bool allow_partial = false);

/// Rebuilds cells (and summaries) from a CSV written by write_csv().
GridReport read_csv(std::istream& in);
GridReport load_csv(const std::filesystem::path& path);

/// Per-scenario tables (ATE_true x pi rows, value and error per method,
/// two decimals) followed by the summary tables with and without the
/// ATE_true = 0.1 cells.
void write_markdown(const GridReport& report, std::ostream& out);
void emit_markdown(const GridReport& report, const std::filesystem::path& path);

struct RunManifest {
  nlohmann::ordered_json config;
  std::string started_at;
  std::string finished_at;
  std::string version = CFSIM_VERSION;
  std::string csv_file;
  std::string markdown_file;
};

nlohmann::ordered_json manifest_json(const RunManifest& manifest, const GridReport& report);
void emit_manifest(const RunManifest& manifest, const GridReport& report,
                   const std::filesystem::path& path);

std::string format_number(double v);
std::string utc_timestamp();

}  // namespace cfsim
