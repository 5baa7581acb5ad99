// cfsim: run the counterfactual ATE simulation grid and render its reports.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfsim/config.hpp"
#include "cfsim/error.hpp"
#include "cfsim/harness.hpp"
#include "cfsim/report.hpp"

namespace fs = std::filesystem;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("CFSIM_OUT_DIR"); env && *env) return env;
  return "results";
}

std::vector<cfsim::ScenarioConfig> load(const std::string& config_path) {
  return config_path.empty() ? cfsim::parse_config("") : cfsim::load_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo study of counterfactual-prediction ATE estimators"};
  app.require_subcommand(1);

  std::string config_path;
  cfsim::ConfigOverrides overrides;
  std::string methods;
  std::string out_dir;
  unsigned threads = 1;
  bool allow_partial = false;

  auto* simulate = app.add_subcommand("simulate", "Run the scenario grid and write CSV, markdown and manifest");
  simulate->add_option("-c,--config", config_path, "JSON config file (defaults if omitted)");
  simulate->add_option("--seed", overrides.master_seed, "Master seed (decimal)");
  simulate->add_option("--replicates", overrides.n_replicates, "Replicates per cell");
  simulate->add_option("--scenario", overrides.scenarios, "Scenario id to run (repeatable), e.g. 1a");
  simulate->add_option("--methods", methods, "Comma-separated subset of LM,Lasso,RF");
  simulate->add_option("--trees", overrides.n_trees, "Random-forest tree count");
  simulate->add_option("--out-dir", out_dir, "Output directory (default $CFSIM_OUT_DIR or ./results)");
  simulate->add_option("--threads", threads, "Worker threads per cell")->check(CLI::PositiveNumber);
  simulate->add_flag("--allow-partial", allow_partial, "Emit reports even if some cells aborted");

  auto* validate = app.add_subcommand("validate", "Check a config file and print the resolved config");
  validate->add_option("-c,--config", config_path, "JSON config file (defaults if omitted)");

  std::string csv_path;
  std::string md_path;
  auto* render = app.add_subcommand("render", "Re-emit the markdown tables from a results CSV");
  render->add_option("--csv", csv_path, "Results CSV")->required();
  render->add_option("-o,--out", md_path, "Markdown output (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto configs = load(config_path);
      std::cout << cfsim::config_to_json(configs).dump(2) << '\n';
      return 0;
    }

    if (*render) {
      const auto report = cfsim::load_csv(csv_path);
      if (md_path.empty()) {
        cfsim::write_markdown(report, std::cout);
      } else {
        cfsim::emit_markdown(report, md_path);
      }
      return report.complete ? 0 : 1;
    }

    if (!methods.empty()) overrides.methods = cfsim::parse_method_list(methods);
    const auto configs = cfsim::apply_overrides(load(config_path), overrides);
    const fs::path dir = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
    fs::create_directories(dir);

    cfsim::RunManifest manifest;
    manifest.config = cfsim::config_to_json(configs);
    manifest.started_at = cfsim::utc_timestamp();
    cfsim::RunOptions options;
    options.threads = threads;
    options.log = [](const std::string& msg) { std::clog << "[cfsim] " << msg << '\n'; };
    const auto report = cfsim::run_grid(configs, options);
    manifest.finished_at = cfsim::utc_timestamp();

    const bool emit = report.complete || allow_partial;
    if (emit) {
      manifest.csv_file = "results.csv";
      manifest.markdown_file = "results.md";
      cfsim::emit_csv(report, dir / manifest.csv_file, allow_partial);
      cfsim::emit_markdown(report, dir / manifest.markdown_file);
    } else {
      std::cerr << "cfsim: some cells aborted; rerun with --allow-partial to emit partial tables\n";
    }
    cfsim::emit_manifest(manifest, report, dir / "manifest.json");
    std::clog << "[cfsim] " << report.cells.size() << " cells written to " << dir.string() << '\n';
    return report.complete ? 0 : 1;
  } catch (const cfsim::Error& e) {
    std::cerr << "cfsim: " << cfsim::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cfsim: " << e.what() << '\n';
    return 2;
  }
}
