#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfsim/datagen.hpp"
#include "cfsim/estimator.hpp"
#include "cfsim/regressor.hpp"

namespace cfsim {

enum class Confounding { None = 0, SingleX3 = 1 };

std::string_view to_string(Confounding c);
std::optional<Confounding> parse_confounding(std::string_view name);

/// Id in the "1a".."2c" scheme: digit = confounding, letter = degree.
std::string scenario_id(Confounding c, int degree);

inline constexpr double kPlaceholderAte = 0.1;

struct ScenarioConfig {
  Confounding confounding = Confounding::None;
  int degree = 1;
  std::vector<double> ate_true_grid{-10.0, -5.0, 0.1, 5.0, 10.0};
  std::vector<double> pi_grid{0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t n_samples = 1000;
  std::size_t n_replicates = 200;
  std::uint64_t master_seed = 20240611;
  std::vector<Method> methods{Method::LM, Method::Lasso, Method::RF};
  CovariateSpec covariates;
  OutcomeParams outcome;  // ate_true and degree are filled per cell
  ConfoundedAssignment confounding_rule;
  ModelParams models;

  std::string id() const { return scenario_id(confounding, degree); }

  /// Throws ErrorCode::Config naming the offending field.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// The six scenarios (two confounding modes x three degrees) with defaults.
std::vector<ScenarioConfig> default_scenarios();

/// Stable in (scenario, ate index, pi index); independent of which other
/// scenarios are configured.
std::uint64_t cell_index(Confounding c, int degree, std::size_t ate_index, std::size_t pi_index);

DgpSpec cell_dgp(const ScenarioConfig& config, double ate_true, double pi, std::uint64_t cell);

struct MethodStats {
  double mean_ate = 0.0;
  double sd_ate = 0.0;
  double error_pct = 0.0;              // percentage error of mean_ate
  double mean_replicate_error_pct = 0.0;
  double sd_replicate_error_pct = 0.0;
};

enum class CellStatus { Complete, Aborted };

struct CellResult {
  std::string scenario;
  Confounding confounding = Confounding::None;
  int degree = 1;
  double ate_true = 0.0;
  double pi_nominal = 0.0;
  std::uint64_t cell_index = 0;
  double pi_empirical_mean = 0.0;
  std::array<std::optional<MethodStats>, kNumMethods> stats;
  std::size_t n_replicates = 0;
  std::size_t n_effective = 0;
  std::size_t retries = 0;
  CellStatus status = CellStatus::Complete;
  std::string diagnostic;

  const std::optional<MethodStats>& operator[](Method m) const {
    return stats[static_cast<std::size_t>(m)];
  }
};

struct ReplicateRecord {
  bool ok = false;
  int retries = 0;
  AteEstimates estimates;
  std::string failure;
};

struct RunOptions {
  unsigned threads = 1;
  // Executes replicates in a permuted order; results do not depend on it.
  std::optional<std::uint64_t> shuffle_seed;
  std::function<void(const std::string&)> log;
};

/// One replicate with the degenerate-split retry policy applied.
ReplicateRecord run_replicate(const ScenarioConfig& config, const DgpSpec& dgp,
                              std::uint64_t replicate_index);

/// Aggregates replicate records (in replicate-index order) into a cell.
CellResult aggregate_cell(const ScenarioConfig& config, double ate_true, double pi,
                          std::uint64_t cell, const std::vector<ReplicateRecord>& records);

CellResult run_cell(const ScenarioConfig& config, double ate_true, double pi, std::uint64_t cell,
                    const RunOptions& options = {});

struct ScenarioSummary {
  std::string scenario;
  Confounding confounding = Confounding::None;
  int degree = 1;
  // Mean of cell error_pct per method; empty when the method was not run.
  std::array<std::optional<double>, kNumMethods> mean_error_pct;
  std::size_t n_cells = 0;

  const std::optional<double>& operator[](Method m) const {
    return mean_error_pct[static_cast<std::size_t>(m)];
  }
};

struct GridReport {
  std::vector<CellResult> cells;
  std::vector<ScenarioSummary> overall;
  std::vector<ScenarioSummary> excluding_placeholder;  // cells with ate_true = 0.1 dropped
  std::vector<ScenarioConfig> configs;
  std::string version = CFSIM_VERSION;
  std::size_t total_retries = 0;
  bool complete = true;
};

/// Per-scenario mean cell errors over cells whose ate_true differs from
/// `excluded_ate`. Aborted cells are skipped.
std::vector<ScenarioSummary> summarize_excluding(const GridReport& report,
                                                 std::optional<double> excluded_ate);

/// Fills `overall` and `excluding_placeholder` from `cells`.
void summarize(GridReport& report);

GridReport run_grid(const std::vector<ScenarioConfig>& configs, const RunOptions& options = {});

}  // namespace cfsim
