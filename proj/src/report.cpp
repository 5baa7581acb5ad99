#include "cfsim/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

constexpr const char* kPrefix[kNumMethods] = {"naive", "lm", "lasso", "rf"};

std::vector<std::string> build_columns() {
  std::vector<std::string> cols{"scenario", "degree", "confounding", "ate_true", "pi_nominal",
                                "pi_empirical_mean"};
  for (const char* p : kPrefix) {
    cols.push_back(std::string(p) + "_ate");
    cols.push_back(std::string(p) + "_err");
  }
  for (const char* p : kPrefix) {
    cols.push_back(std::string(p) + "_ate_sd");
    cols.push_back(std::string(p) + "_err_rep_mean");
    cols.push_back(std::string(p) + "_err_rep_sd");
  }
  for (const char* c : {"n_replicates", "n_effective", "retries", "cell_index", "status"}) {
    cols.emplace_back(c);
  }
  return cols;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(',', start);
    out.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidData, "csv: column " + column + ": cannot parse \"" + s + "\"");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& s, const std::string& column) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidData, "csv: column " + column + ": cannot parse \"" + s + "\"");
  }
  return v;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string degree_label(int degree) {
  switch (degree) {
    case 1: return "linear";
    case 2: return "squared";
    default: return "cubed";
  }
}

std::string scenario_label(const std::string& id, Confounding c, int degree) {
  return id + " (" + (c == Confounding::None ? "no confounding" : "confounding via x3") + ", " +
         degree_label(degree) + ")";
}

void write_summary_table(std::ostream& out, const std::vector<ScenarioSummary>& rows) {
  out << "| Scenario | Naive | LM | Lasso | RF |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& s : rows) {
    out << "| " << scenario_label(s.scenario, s.confounding, s.degree);
    for (Method m : kAllMethods) out << " | " << (s[m] ? fixed2(*s[m]) : "n/a");
    out << " |\n";
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidData, "format_number: conversion failed");
  return std::string(buf, ptr);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = build_columns();
  return cols;
}

void write_csv(const GridReport& report, std::ostream& out, bool allow_partial) {
  if (!report.complete && !allow_partial) {
    throw Error(ErrorCode::InvalidParameter,
                "write_csv: report is incomplete; partial output needs allow_partial");
  }
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& c : report.cells) {
    if (c.status != CellStatus::Complete && !allow_partial) continue;
    const bool done = c.status == CellStatus::Complete;
    out << c.scenario << ',' << c.degree << ',' << to_string(c.confounding) << ','
        << format_number(c.ate_true) << ',' << format_number(c.pi_nominal) << ','
        << (done ? format_number(c.pi_empirical_mean) : "");
    for (const auto& s : c.stats) {
      out << ',' << (s ? format_number(s->mean_ate) : "") << ','
          << (s ? format_number(s->error_pct) : "");
    }
    for (const auto& s : c.stats) {
      out << ',' << (s ? format_number(s->sd_ate) : "") << ','
          << (s ? format_number(s->mean_replicate_error_pct) : "") << ','
          << (s ? format_number(s->sd_replicate_error_pct) : "");
    }
    out << ',' << c.n_replicates << ',' << c.n_effective << ',' << c.retries << ',' << c.cell_index
        << ',' << (done ? "complete" : "aborted") << '\n';
  }
}

void emit_csv(const GridReport& report, const std::filesystem::path& path, bool allow_partial) {
  // Render first so a refused partial report leaves no file behind.
  std::ostringstream buf;
  write_csv(report, buf, allow_partial);
  auto out = open_for_write(path);
  out << buf.str();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

GridReport read_csv(std::istream& in) {
  const auto& cols = csv_columns();
  std::string line;
  if (!std::getline(in, line) || split_fields(line) != cols) {
    throw Error(ErrorCode::InvalidData, "csv: header does not match the results layout");
  }
  GridReport report;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != cols.size()) {
      throw Error(ErrorCode::InvalidData, "csv: row " + std::to_string(row) + " has " +
                                              std::to_string(f.size()) + " fields");
    }
    CellResult c;
    c.scenario = f[0];
    c.degree = static_cast<int>(parse_unsigned(f[1], cols[1]));
    const auto conf = parse_confounding(f[2]);
    if (!conf) throw Error(ErrorCode::InvalidData, "csv: bad confounding \"" + f[2] + "\"");
    c.confounding = *conf;
    c.ate_true = parse_double(f[3], cols[3]);
    c.pi_nominal = parse_double(f[4], cols[4]);
    const std::size_t tail = 6 + 2 * kNumMethods + 3 * kNumMethods;
    c.status = f[tail + 4] == "complete" ? CellStatus::Complete : CellStatus::Aborted;
    if (c.status == CellStatus::Complete) c.pi_empirical_mean = parse_double(f[5], cols[5]);
    for (std::size_t m = 0; m < kNumMethods; ++m) {
      const std::size_t a = 6 + 2 * m;
      const std::size_t b = 6 + 2 * kNumMethods + 3 * m;
      if (f[a].empty()) continue;
      MethodStats s;
      s.mean_ate = parse_double(f[a], cols[a]);
      s.error_pct = parse_double(f[a + 1], cols[a + 1]);
      s.sd_ate = parse_double(f[b], cols[b]);
      s.mean_replicate_error_pct = parse_double(f[b + 1], cols[b + 1]);
      s.sd_replicate_error_pct = parse_double(f[b + 2], cols[b + 2]);
      c.stats[m] = s;
    }
    c.n_replicates = parse_unsigned(f[tail], cols[tail]);
    c.n_effective = parse_unsigned(f[tail + 1], cols[tail + 1]);
    c.retries = parse_unsigned(f[tail + 2], cols[tail + 2]);
    c.cell_index = parse_unsigned(f[tail + 3], cols[tail + 3]);
    report.total_retries += c.retries;
    if (c.status != CellStatus::Complete) report.complete = false;
    report.cells.push_back(std::move(c));
  }
  summarize(report);
  return report;
}

GridReport load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_csv(in);
}

void write_markdown(const GridReport& report, std::ostream& out) {
  out << "# Counterfactual ATE simulation results\n\n";
  out << "Values are mean ATE estimates over replicates; E(.) is the absolute percentage error "
         "of that mean against ATE_true.\n";
  std::string current;
  double block_ate = 0.0;
  for (const auto& c : report.cells) {
    if (c.scenario != current) {
      current = c.scenario;
      out << "\n## Scenario " << scenario_label(c.scenario, c.confounding, c.degree) << "\n\n";
      out << "| ATE_true | pi | Naive | E(Naive) | LM | E(LM) | Lasso | E(Lasso) | RF | E(RF) |\n";
      out << "|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
      block_ate = std::nan("");
    }
    const bool new_block = !(c.ate_true == block_ate);
    block_ate = c.ate_true;
    out << "| " << (new_block ? format_number(c.ate_true) : "") << " | " << format_number(c.pi_nominal);
    for (const auto& s : c.stats) {
      if (c.status != CellStatus::Complete) {
        out << " | aborted | aborted";
      } else if (s) {
        out << " | " << fixed2(s->mean_ate) << " | " << fixed2(s->error_pct);
      } else {
        out << " | n/a | n/a";
      }
    }
    out << " |\n";
  }
  out << "\n## Mean absolute percentage errors, all cells\n\n";
  write_summary_table(out, report.overall);
  if (!report.excluding_placeholder.empty()) {
    out << "\n## Mean absolute percentage errors, excluding ATE_true = 0.1\n\n";
    write_summary_table(out, report.excluding_placeholder);
  }
}

void emit_markdown(const GridReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_markdown(report, out);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

nlohmann::ordered_json manifest_json(const RunManifest& manifest, const GridReport& report) {
  using Json = nlohmann::ordered_json;
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    Json entry{{"scenario", c.scenario},
               {"ate_true", c.ate_true},
               {"pi_nominal", c.pi_nominal},
               {"cell_index", c.cell_index},
               {"status", c.status == CellStatus::Complete ? "complete" : "aborted"},
               {"n_effective", c.n_effective},
               {"retries", c.retries}};
    if (!c.diagnostic.empty()) entry["diagnostic"] = c.diagnostic;
    cells.push_back(std::move(entry));
  }
  Json seeds = Json::array();
  for (const auto& c : report.configs) seeds.push_back(c.master_seed);
  return Json{{"artifact_version", manifest.version},
              {"started_at", manifest.started_at},
              {"finished_at", manifest.finished_at},
              {"master_seeds", seeds},
              {"complete", report.complete},
              {"total_retries", report.total_retries},
              {"csv", manifest.csv_file},
              {"markdown", manifest.markdown_file},
              {"config", manifest.config},
              {"cells", cells}};
}

void emit_manifest(const RunManifest& manifest, const GridReport& report,
                   const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << manifest_json(manifest, report).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace cfsim
