#include "cfsim/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;  // 0 for constant columns
};

Standardization standardization_of(const Eigen::MatrixXd& x) {
  Standardization s;
  s.center = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt((x.col(j).array() - s.center(j)).square().mean());
    s.scale(j) = sd <= 1e-12 * std::max(1.0, std::abs(s.center(j))) ? 0.0 : sd;
  }
  return s;
}

Eigen::MatrixXd apply(const Standardization& s, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (s.scale(j) == 0.0) {
      z.col(j).setZero();
    } else {
      z.col(j) = (x.col(j).array() - s.center(j)) / s.scale(j);
    }
  }
  return z;
}

struct CenteredProblem {
  Standardization standardization;
  double y_mean = 0.0;
  GramSystem system;
};

CenteredProblem center_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  CenteredProblem p;
  p.standardization = standardization_of(x);
  p.y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - p.y_mean;
  p.system = GramSystem::from_data(apply(p.standardization, x), yc);
  return p;
}

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const char* who) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::Shape, std::string(who) + ": x has " + std::to_string(x.rows()) +
                                      " rows but y has " + std::to_string(y.size()));
  }
  if (x.rows() == 0) throw Error(ErrorCode::InsufficientData, std::string(who) + ": no rows");
  if (!x.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::InvalidData, std::string(who) + ": non-finite input");
  }
}

// Walks a descending penalty path with warm starts, calling visit(k, beta)
// after solving for grid[k]. Returns false if any solve hit max_iter.
template <typename Visit>
bool walk_path(const GramSystem& system, const std::vector<double>& grid, std::size_t last,
               const CdOptions& options, Visit&& visit) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(system.xty.size());
  bool converged = true;
  for (std::size_t k = 0; k <= last && k < grid.size(); ++k) {
    CdResult r = coordinate_descent(system, grid[k], beta, options);
    converged = converged && r.converged;
    beta = std::move(r.beta);
    visit(k, beta);
  }
  return converged;
}

LassoFit finish_fit(const CenteredProblem& p, const Eigen::VectorXd& beta_std, double lambda) {
  LassoFit fit;
  fit.lambda = lambda;
  fit.center = p.standardization.center;
  fit.scale = p.standardization.scale;
  fit.standardized_coefficients = beta_std;
  fit.coefficients = Eigen::VectorXd::Zero(beta_std.size());
  for (Eigen::Index j = 0; j < beta_std.size(); ++j) {
    if (fit.scale(j) > 0.0) fit.coefficients(j) = beta_std(j) / fit.scale(j);
  }
  fit.intercept = p.y_mean - fit.center.dot(fit.coefficients);
  return fit;
}

std::vector<double> resolve_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const LassoOptions& options) {
  if (!options.lambda_grid.empty()) {
    std::vector<double> grid = options.lambda_grid;
    for (double l : grid) {
      if (!(l >= 0.0) || !std::isfinite(l)) {
        throw Error(ErrorCode::InvalidParameter, "lasso.lambda_grid: penalties must be finite and >= 0");
      }
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    return grid;
  }
  return lambda_grid(lambda_max(x, y), options.n_lambda, options.lambda_min_ratio);
}

}  // namespace

GramSystem GramSystem::from_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size() || x.rows() == 0) {
    throw Error(ErrorCode::Shape, "GramSystem: x and y must share a positive row count");
  }
  const double n = static_cast<double>(x.rows());
  GramSystem s;
  s.gram = (x.transpose() * x) / n;
  s.xty = (x.transpose() * y) / n;
  s.yty = y.squaredNorm() / n;
  return s;
}

double lasso_objective(const GramSystem& system, const Eigen::VectorXd& beta, double lambda) {
  const double quad = system.yty - 2.0 * beta.dot(system.xty) + beta.dot(system.gram * beta);
  return 0.5 * quad + lambda * beta.lpNorm<1>();
}

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

CdResult coordinate_descent(const GramSystem& system, double lambda, const Eigen::VectorXd& init,
                            const CdOptions& options) {
  const Eigen::Index p = system.xty.size();
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "coordinate_descent: lambda must be >= 0");
  }
  if (init.size() != 0 && init.size() != p) {
    throw Error(ErrorCode::Shape, "coordinate_descent: init has " + std::to_string(init.size()) +
                                      " entries, expected " + std::to_string(p));
  }
  CdResult result;
  result.beta = init.size() == 0 ? Eigen::VectorXd::Zero(p) : init;
  Eigen::VectorXd& beta = result.beta;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(system.gram(j, j) > 0.0)) beta(j) = 0.0;
  }
  // grad_j = <x_j, r>/n for the current residual r = y - X beta.
  Eigen::VectorXd grad = system.xty - system.gram * beta;
  if (options.record_objective) result.objective_trace.push_back(lasso_objective(system, beta, lambda));

  for (int cycle = 1; cycle <= options.max_iter; ++cycle) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double d = system.gram(j, j);
      if (!(d > 0.0)) continue;
      const double updated = soft_threshold(grad(j) + d * beta(j), lambda) / d;
      const double delta = updated - beta(j);
      if (delta != 0.0) {
        grad.noalias() -= system.gram.col(j) * delta;
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    result.cycles = cycle;
    if (options.record_objective) {
      result.objective_trace.push_back(lasso_objective(system, beta, lambda));
    }
    if (max_change < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

CdResult coordinate_descent(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y_centered,
                            double lambda, const Eigen::VectorXd& init, const CdOptions& options) {
  return coordinate_descent(GramSystem::from_data(x_std, y_centered), lambda, init, options);
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_inputs(x, y, "lambda_max");
  const CenteredProblem p = center_problem(x, y);
  return p.system.xty.size() == 0 ? 0.0 : p.system.xty.cwiseAbs().maxCoeff();
}

std::vector<double> lambda_grid(double lambda_max, int n_lambda, double min_ratio) {
  if (n_lambda < 1) throw Error(ErrorCode::InvalidParameter, "lasso.n_lambda must be >= 1");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "lasso.lambda_min_ratio must lie in (0, 1]");
  }
  if (!(lambda_max > 0.0)) return {0.0};
  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  if (n_lambda == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double step = std::log(min_ratio) / static_cast<double>(n_lambda - 1);
  for (int k = 0; k < n_lambda; ++k) grid[k] = lambda_max * std::exp(step * k);
  grid.front() = lambda_max;
  return grid;
}

LassoFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options) {
  check_inputs(x, y, "fit_lasso");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidParameter, "fit_lasso: lambda must be finite and >= 0");
  }
  const CenteredProblem p = center_problem(x, y);
  const CdOptions cd{options.tol, options.max_iter, false};

  std::vector<double> path;
  const double top = p.system.xty.size() == 0 ? 0.0 : p.system.xty.cwiseAbs().maxCoeff();
  for (double l : lambda_grid(top, options.n_lambda, options.lambda_min_ratio)) {
    if (l > lambda) path.push_back(l);
  }
  path.push_back(lambda);

  Eigen::VectorXd beta;
  const bool converged =
      walk_path(p.system, path, path.size() - 1, cd,
                [&](std::size_t, const Eigen::VectorXd& b) { beta = b; });
  LassoFit fit = finish_fit(p, beta, lambda);
  fit.lambda_grid = {lambda};
  fit.converged = converged;
  return fit;
}

LassoFit fit_lasso_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, RngStream& stream,
                      const LassoOptions& options) {
  check_inputs(x, y, "fit_lasso_cv");
  if (options.folds < 2) throw Error(ErrorCode::InvalidParameter, "lasso.folds must be >= 2");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto folds = static_cast<std::size_t>(options.folds);
  if (n < folds) {
    throw Error(ErrorCode::InsufficientData, "fit_lasso_cv: " + std::to_string(n) +
                                                 " rows cannot fill " + std::to_string(folds) +
                                                 " folds");
  }
  const std::vector<double> grid = resolve_grid(x, y, options);
  const CdOptions cd{options.tol, options.max_iter, false};

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[stream.uniform_index(i + 1)]);
  }
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[perm[k]] = k * folds / n;

  std::vector<double> sse(grid.size(), 0.0);
  bool converged = true;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) {
      (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    const Eigen::MatrixXd x_train = x(train, Eigen::all);
    const Eigen::VectorXd y_train = y(train);
    const Eigen::MatrixXd x_test = x(test, Eigen::all);
    const Eigen::VectorXd y_test = y(test);

    const CenteredProblem p = center_problem(x_train, y_train);
    const Eigen::MatrixXd z_test = apply(p.standardization, x_test);
    converged &= walk_path(p.system, grid, grid.size() - 1, cd,
                           [&](std::size_t k, const Eigen::VectorXd& beta) {
                             const Eigen::VectorXd resid =
                                 y_test - ((z_test * beta).array() + p.y_mean).matrix();
                             sse[k] += resid.squaredNorm();
                           });
  }

  std::vector<double> cv_mse(grid.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    cv_mse[k] = sse[k] / static_cast<double>(n);
    if (cv_mse[k] < cv_mse[best]) best = k;
  }

  const CenteredProblem full = center_problem(x, y);
  Eigen::VectorXd beta;
  converged &= walk_path(full.system, grid, best, cd,
                         [&](std::size_t, const Eigen::VectorXd& b) { beta = b; });
  LassoFit fit = finish_fit(full, beta, grid[best]);
  fit.lambda_grid = grid;
  fit.cv_mse = std::move(cv_mse);
  fit.converged = converged;
  return fit;
}

double predict_row(const LassoFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != fit.coefficients.size()) {
    throw Error(ErrorCode::Shape, "predict: row has " + std::to_string(row.size()) +
                                      " entries, model expects " +
                                      std::to_string(fit.coefficients.size()));
  }
  return fit.intercept + row.dot(fit.coefficients);
}

Eigen::VectorXd predict(const LassoFit& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.coefficients.size()) {
    throw Error(ErrorCode::Shape, "predict: design has " + std::to_string(x.cols()) +
                                      " columns, model expects " +
                                      std::to_string(fit.coefficients.size()));
  }
  return (x * fit.coefficients).array() + fit.intercept;
}

}  // namespace cfsim
