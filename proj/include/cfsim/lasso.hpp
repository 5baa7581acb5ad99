#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cfsim/prng.hpp"

namespace cfsim {

struct CdOptions {
  double tol = 1e-7;       // on the largest coefficient change in a cycle
  int max_iter = 10000;    // full cycles
  bool record_objective = false;
};

struct CdResult {
  Eigen::VectorXd beta;
  int cycles = 0;
  bool converged = false;
  // Objective after each full cycle when requested; entry 0 is the start point.
  std::vector<double> objective_trace;
};

/// Sufficient statistics of a centered least-squares problem, scaled by 1/n:
/// gram = X'X/n, xty = X'y/n, yty = y'y/n.
struct GramSystem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd xty;
  double yty = 0.0;

  static GramSystem from_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
};

/// (1/(2n))||y - X beta||^2 + lambda ||beta||_1, evaluated from the Gram form.
double lasso_objective(const GramSystem& system, const Eigen::VectorXd& beta, double lambda);

double soft_threshold(double z, double lambda);

/// Cyclic coordinate descent for the lasso on centered data.
///
/// Columns whose Gram diagonal is zero are held at 0. Hitting max_iter is not
/// an error; the result reports converged = false.
CdResult coordinate_descent(const GramSystem& system, double lambda, const Eigen::VectorXd& init,
                            const CdOptions& options = {});

CdResult coordinate_descent(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y_centered,
                            double lambda, const Eigen::VectorXd& init,
                            const CdOptions& options = {});

struct LassoOptions {
  int folds = 10;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  double tol = 1e-7;
  int max_iter = 10000;
  // Overrides the automatic grid when non-empty.
  std::vector<double> lambda_grid;

  friend bool operator==(const LassoOptions&, const LassoOptions&) = default;
};

struct LassoFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;  // original scale
  double lambda = 0.0;
  // Per-column standardization; scale == 0 marks a constant column.
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  Eigen::VectorXd standardized_coefficients;
  std::vector<double> lambda_grid;  // descending
  std::vector<double> cv_mse;       // parallel to lambda_grid; empty without CV
  bool converged = true;
};

/// Largest useful penalty: max_j |<x_j, y - mean(y)>| / n on standardized columns.
double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Descending log-spaced grid from lambda_max down to lambda_max * min_ratio.
std::vector<double> lambda_grid(double lambda_max, int n_lambda, double min_ratio);

/// Lasso at a fixed penalty on the full data (warm-started along the grid
/// from lambda_max when lambda is below it).
LassoFit fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options = {});

/// Lasso with the penalty chosen by K-fold cross-validated mean squared error.
/// Folds are contiguous blocks of a stream-seeded permutation; ties favour
/// the larger penalty.
LassoFit fit_lasso_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, RngStream& stream,
                      const LassoOptions& options = {});

double predict_row(const LassoFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row);
Eigen::VectorXd predict(const LassoFit& fit, const Eigen::MatrixXd& x);

}  // namespace cfsim
