#include "cfsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double mean_of(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  CompensatedSum s;
  for (double x : v) s.add((x - mean) * (x - mean));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

bool same_ate(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
}

void config_error(const std::string& what) { throw Error(ErrorCode::Config, what); }

}  // namespace

std::string_view to_string(Confounding c) {
  return c == Confounding::None ? "none" : "single_x3";
}

std::optional<Confounding> parse_confounding(std::string_view name) {
  if (name == "none") return Confounding::None;
  if (name == "single_x3") return Confounding::SingleX3;
  return std::nullopt;
}

std::string scenario_id(Confounding c, int degree) {
  std::string id;
  id += c == Confounding::None ? '1' : '2';
  id += static_cast<char>('a' + (degree - 1));
  return id;
}

void ScenarioConfig::validate() const {
  if (degree < 1 || degree > 3) config_error("degree: must be 1, 2 or 3");
  if (ate_true_grid.empty()) config_error("ate_true_grid: must not be empty");
  if (pi_grid.empty()) config_error("pi_grid: must not be empty");
  if (ate_true_grid.size() > 255 || pi_grid.size() > 255) {
    config_error("ate_true_grid/pi_grid: at most 255 values each");
  }
  for (double a : ate_true_grid) {
    if (!std::isfinite(a)) config_error("ate_true_grid: values must be finite");
    if (a == 0.0) {
      config_error(
          "ate_true_grid: contains 0; the percentage error |100 (ate_sim - ate_true) / ate_true| "
          "divides by ate_true (use a small value such as 0.1 instead)");
    }
  }
  for (double p : pi_grid) {
    const bool ok = confounding == Confounding::None ? (p > 0.0 && p < 1.0) : (p >= 0.0 && p <= 1.0);
    if (!ok) {
      config_error("pi_grid: value " + std::to_string(p) +
                   (confounding == Confounding::None ? " outside (0, 1)" : " outside [0, 1]"));
    }
  }
  if (n_samples < 50) config_error("n_samples: must be >= 50");
  if (n_replicates < 1) config_error("n_replicates: must be >= 1");
  std::vector<Method> seen;
  for (Method m : methods) {
    if (m == Method::Naive) config_error("methods: Naive is always reported and cannot be listed");
    if (std::find(seen.begin(), seen.end(), m) != seen.end()) {
      config_error("methods: duplicate " + std::string(to_string(m)));
    }
    seen.push_back(m);
  }
  try {
    covariates.validate();
    OutcomeParams probe = outcome;
    probe.degree = degree;
    probe.validate();
    cfsim::validate(TreatmentRule{confounding_rule});
  } catch (const Error& e) {
    config_error(e.what());
  }
  const auto& l = models.lasso;
  if (l.folds < 2) config_error("lasso.folds: must be >= 2");
  if (l.n_lambda < 1) config_error("lasso.n_lambda: must be >= 1");
  if (!(l.lambda_min_ratio > 0.0 && l.lambda_min_ratio <= 1.0)) {
    config_error("lasso.lambda_min_ratio: must lie in (0, 1]");
  }
  if (!(l.tol > 0.0)) config_error("lasso.tol: must be > 0");
  if (l.max_iter < 1) config_error("lasso.max_iter: must be >= 1");
  const auto& f = models.forest;
  if (f.n_trees < 1) config_error("forest.n_trees: must be >= 1");
  if (f.mtry < 0 || f.mtry > kNumCovariates) config_error("forest.mtry: must lie in [0, 4] (0 = auto)");
  if (f.min_leaf_size < 1) config_error("forest.min_leaf_size: must be >= 1");
}

std::vector<ScenarioConfig> default_scenarios() {
  std::vector<ScenarioConfig> out;
  for (Confounding c : {Confounding::None, Confounding::SingleX3}) {
    for (int degree = 1; degree <= 3; ++degree) {
      ScenarioConfig s;
      s.confounding = c;
      s.degree = degree;
      out.push_back(s);
    }
  }
  return out;
}

std::uint64_t cell_index(Confounding c, int degree, std::size_t ate_index, std::size_t pi_index) {
  const auto scenario = static_cast<std::uint64_t>(c) * 3 + static_cast<std::uint64_t>(degree - 1);
  return (scenario * 256 + ate_index) * 256 + pi_index;
}

DgpSpec cell_dgp(const ScenarioConfig& config, double ate_true, double pi, std::uint64_t cell) {
  DgpSpec dgp;
  dgp.covariates = config.covariates;
  dgp.outcome = config.outcome;
  dgp.outcome.ate_true = ate_true;
  dgp.outcome.degree = config.degree;
  if (config.confounding == Confounding::None) {
    dgp.treatment = RandomizedAssignment{pi};
  } else {
    dgp.treatment = config.confounding_rule;
  }
  dgp.n = config.n_samples;
  dgp.master_seed = config.master_seed;
  dgp.cell_index = cell;
  return dgp;
}

ReplicateRecord run_replicate(const ScenarioConfig& config, const DgpSpec& dgp,
                              std::uint64_t replicate_index) {
  ReplicateRecord rec;
  const StreamProvenance provenance{dgp.master_seed, dgp.cell_index, replicate_index, 0};
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const Dataset d = generate_dataset(dgp, replicate_index, attempt);
      rec.estimates = estimate_all(d, dgp.outcome.ate_true, config.methods, config.models,
                                   provenance, attempt);
      rec.ok = true;
      return rec;
    } catch (const Error& e) {
      rec.failure = e.what();
      if (e.code() != ErrorCode::DegenerateSplit) return rec;
      if (attempt == 0) rec.retries = 1;
    }
  }
  return rec;
}

CellResult aggregate_cell(const ScenarioConfig& config, double ate_true, double pi,
                          std::uint64_t cell, const std::vector<ReplicateRecord>& records) {
  CellResult out;
  out.scenario = config.id();
  out.confounding = config.confounding;
  out.degree = config.degree;
  out.ate_true = ate_true;
  out.pi_nominal = pi;
  out.cell_index = cell;
  out.n_replicates = records.size();

  std::size_t failed = 0;
  std::string first_failure;
  std::vector<double> pis;
  for (const auto& r : records) {
    out.retries += static_cast<std::size_t>(r.retries);
    if (!r.ok) {
      if (failed++ == 0) first_failure = r.failure;
      continue;
    }
    pis.push_back(r.estimates.pi_empirical);
  }
  out.n_effective = pis.size();
  if (failed * 100 > records.size() || pis.empty()) {
    out.status = CellStatus::Aborted;
    out.diagnostic = std::to_string(failed) + " of " + std::to_string(records.size()) +
                     " replicates failed; first: " + first_failure;
    return out;
  }
  out.pi_empirical_mean = mean_of(pis);

  for (Method m : kAllMethods) {
    std::vector<double> ates, errors;
    for (const auto& r : records) {
      if (!r.ok || !r.estimates[m]) continue;
      ates.push_back(r.estimates[m]->ate);
      errors.push_back(r.estimates[m]->error_pct);
    }
    if (ates.empty()) continue;
    MethodStats s;
    s.mean_ate = mean_of(ates);
    s.sd_ate = sd_of(ates, s.mean_ate);
    s.error_pct = pct_error(s.mean_ate, ate_true);
    s.mean_replicate_error_pct = mean_of(errors);
    s.sd_replicate_error_pct = sd_of(errors, s.mean_replicate_error_pct);
    out.stats[static_cast<std::size_t>(m)] = s;
  }
  return out;
}

CellResult run_cell(const ScenarioConfig& config, double ate_true, double pi, std::uint64_t cell,
                    const RunOptions& options) {
  config.validate();
  const DgpSpec dgp = cell_dgp(config, ate_true, pi, cell);
  const std::size_t n = config.n_replicates;

  std::vector<std::uint64_t> order(n);
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  if (options.shuffle_seed) {
    RngStream s = derive_stream(*options.shuffle_seed, cell, 0, 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[s.uniform_index(i)]);
  }

  std::vector<ReplicateRecord> records(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      const std::uint64_t r = order[k];
      records[r] = run_replicate(config, dgp, r);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  CellResult result = aggregate_cell(config, ate_true, pi, cell, records);
  if (options.log) {
    if (result.retries > 0) {
      options.log("cell " + result.scenario + " ate=" + std::to_string(ate_true) + " pi=" +
                  std::to_string(pi) + ": " + std::to_string(result.retries) +
                  " degenerate-split retries");
    }
    if (result.status == CellStatus::Aborted) {
      options.log("cell " + result.scenario + " ate=" + std::to_string(ate_true) + " pi=" +
                  std::to_string(pi) + " aborted: " + result.diagnostic);
    }
  }
  return result;
}

std::vector<ScenarioSummary> summarize_excluding(const GridReport& report,
                                                 std::optional<double> excluded_ate) {
  if (excluded_ate) {
    const bool present = std::any_of(report.cells.begin(), report.cells.end(), [&](const CellResult& c) {
      return same_ate(c.ate_true, *excluded_ate);
    });
    if (!present) {
      throw Error(ErrorCode::InvalidParameter,
                  "summarize_excluding: ate_true " + std::to_string(*excluded_ate) + " not in grid");
    }
  }
  std::vector<ScenarioSummary> out;
  std::vector<std::string> order;
  for (const auto& c : report.cells) {
    if (std::find(order.begin(), order.end(), c.scenario) == order.end()) order.push_back(c.scenario);
  }
  for (const auto& id : order) {
    ScenarioSummary s;
    s.scenario = id;
    std::array<std::vector<double>, kNumMethods> errs;
    for (const auto& c : report.cells) {
      if (c.scenario != id) continue;
      s.confounding = c.confounding;
      s.degree = c.degree;
      if (excluded_ate && same_ate(c.ate_true, *excluded_ate)) continue;
      if (c.status != CellStatus::Complete) continue;
      ++s.n_cells;
      for (std::size_t m = 0; m < kNumMethods; ++m) {
        if (c.stats[m]) errs[m].push_back(c.stats[m]->error_pct);
      }
    }
    if (s.n_cells == 0) {
      throw Error(ErrorCode::EmptySummary, "summarize_excluding: no cells left for scenario " + id);
    }
    for (std::size_t m = 0; m < kNumMethods; ++m) {
      if (errs[m].size() == s.n_cells) s.mean_error_pct[m] = mean_of(errs[m]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void summarize(GridReport& report) {
  report.overall.clear();
  report.excluding_placeholder.clear();
  if (report.cells.empty()) return;
  try {
    report.overall = summarize_excluding(report, std::nullopt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptySummary) throw;
  }
  try {
    report.excluding_placeholder = summarize_excluding(report, kPlaceholderAte);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptySummary && e.code() != ErrorCode::InvalidParameter) throw;
  }
}

GridReport run_grid(const std::vector<ScenarioConfig>& configs, const RunOptions& options) {
  if (configs.empty()) throw Error(ErrorCode::Config, "run_grid: no scenarios configured");
  for (const auto& c : configs) c.validate();
  GridReport report;
  report.configs = configs;
  for (const auto& config : configs) {
    for (std::size_t a = 0; a < config.ate_true_grid.size(); ++a) {
      for (std::size_t p = 0; p < config.pi_grid.size(); ++p) {
        const std::uint64_t cell = cell_index(config.confounding, config.degree, a, p);
        CellResult r = run_cell(config, config.ate_true_grid[a], config.pi_grid[p], cell, options);
        report.total_retries += r.retries;
        if (r.status != CellStatus::Complete) report.complete = false;
        report.cells.push_back(std::move(r));
      }
    }
  }
  summarize(report);
  return report;
}

}  // namespace cfsim
