#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cfsim/datagen.hpp"
#include "cfsim/error.hpp"
#include "cfsim/lasso.hpp"
#include "cfsim/ols.hpp"

using namespace cfsim;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Problem linear_problem(std::uint64_t seed, std::size_t n, double noise_sd) {
  RngStream s = derive_stream(seed, 0, 0, 0);
  Problem p;
  p.x = generate_covariates(n, CovariateSpec{}, s);
  p.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.x.rows(); ++i) {
    p.y(i) = 0.5 + 0.7 * p.x(i, 0) + 0.5 * p.x(i, 1) + 0.5 * p.x(i, 2) + 0.7 * p.x(i, 3) +
             (noise_sd > 0 ? sample_normal(s, 0, noise_sd) : 0.0);
  }
  return p;
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("lambda = 0 reproduces least squares") {
  const Problem p = linear_problem(21, 500, 2.0);
  LassoOptions opts;
  opts.tol = 1e-12;
  opts.max_iter = 100000;
  const LassoFit lasso = fit_lasso(p.x, p.y, 0.0, opts);
  const LinearFit ols = fit_ols(p.x, p.y);
  CHECK(lasso.converged);
  CHECK((lasso.coefficients - ols.coefficients).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(lasso.intercept == doctest::Approx(ols.intercept).epsilon(1e-6));
}

TEST_CASE("lambda_max zeroes every coefficient and nothing smaller does") {
  const Problem p = linear_problem(22, 300, 1.0);
  const double top = lambda_max(p.x, p.y);
  const LassoFit at = fit_lasso(p.x, p.y, top);
  CHECK(at.coefficients.cwiseAbs().maxCoeff() == 0.0);
  CHECK(at.intercept == doctest::Approx(p.y.mean()));
  const LassoFit below = fit_lasso(p.x, p.y, top * 0.99);
  CHECK(below.coefficients.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("single standardized column matches the closed form") {
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 9;
  Eigen::VectorXd y(6);
  y << 2, 1, 4, 3, 7, 8;
  const double mx = x.mean(), my = y.mean();
  double sxx = 0, sxy = 0;
  for (int i = 0; i < 6; ++i) {
    sxx += (x(i, 0) - mx) * (x(i, 0) - mx);
    sxy += (x(i, 0) - mx) * (y(i) - my);
  }
  const double sd = std::sqrt(sxx / 6);
  const double z = sxy / sd / 6;  // <z, y>/n for standardized z
  CHECK(lambda_max(x, y) == doctest::Approx(std::abs(z)));
  for (double lambda : {0.0, 0.3, 1.0, 2.5}) {
    const double b_std = std::max(0.0, std::abs(z) - lambda) * (z > 0 ? 1 : -1);
    const LassoFit fit = fit_lasso(x, y, lambda);
    CHECK(fit.standardized_coefficients(0) == doctest::Approx(b_std).epsilon(1e-9));
    CHECK(fit.coefficients(0) == doctest::Approx(b_std / sd).epsilon(1e-9));
    CHECK(fit.intercept == doctest::Approx(my - mx * b_std / sd).epsilon(1e-9));
  }
}

TEST_CASE("l1 norm shrinks monotonically along the path") {
  const Problem p = linear_problem(23, 400, 3.0);
  const auto grid = lambda_grid(lambda_max(p.x, p.y), 30, 1e-3);
  double prev = -1.0;
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    LassoOptions opts;
    opts.tol = 1e-10;
    const double norm = fit_lasso(p.x, p.y, *it, opts).standardized_coefficients.lpNorm<1>();
    if (prev >= 0.0) CHECK(norm <= prev + 1e-8);
    prev = norm;
  }
}

TEST_CASE("coordinate descent never increases the objective") {
  const Problem p = linear_problem(24, 200, 1.0);
  Eigen::MatrixXd z = p.x;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double m = z.col(j).mean();
    const double s = std::sqrt((z.col(j).array() - m).square().mean());
    z.col(j) = (z.col(j).array() - m) / s;
  }
  const Eigen::VectorXd yc = p.y.array() - p.y.mean();
  CdOptions opts;
  opts.record_objective = true;
  opts.tol = 1e-12;
  for (double lambda : {0.0, 0.05, 0.5}) {
    const CdResult r = coordinate_descent(z, yc, lambda, Eigen::VectorXd::Zero(4), opts);
    REQUIRE(r.objective_trace.size() >= 2);
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
      CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-12 * std::abs(r.objective_trace[0]));
    }
    CHECK(r.converged);
  }
}

TEST_CASE("max_iter exhaustion is reported, not thrown") {
  const Problem p = linear_problem(25, 100, 1.0);
  const GramSystem g = GramSystem::from_data(p.x.rowwise() - p.x.colwise().mean(),
                                             p.y.array() - p.y.mean());
  CdOptions opts;
  opts.max_iter = 1;
  opts.tol = 0.0;
  const CdResult r = coordinate_descent(g, 0.0, Eigen::VectorXd(), opts);
  CHECK_FALSE(r.converged);
  CHECK(r.cycles == 1);
}

TEST_CASE("lambda grid") {
  const auto g = lambda_grid(2.0, 100, 1e-4);
  REQUIRE(g.size() == 100);
  CHECK(g.front() == 2.0);
  CHECK(g.back() == doctest::Approx(2e-4));
  for (std::size_t k = 1; k < g.size(); ++k) {
    CHECK(g[k] < g[k - 1]);
    CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(1e-4, 1.0 / 99)));
  }
  CHECK_THROWS_AS(lambda_grid(1.0, 0, 1e-4), Error);
  CHECK_THROWS_AS(lambda_grid(1.0, 10, 0.0), Error);
}

TEST_CASE("cross-validated lasso") {
  const Problem p = linear_problem(26, 1000, 0.0);
  RngStream s = derive_stream(26, 0, 0, purpose::kModel);
  const LassoFit fit = fit_lasso_cv(p.x, p.y, s);
  REQUIRE(fit.lambda_grid.size() == 100);
  REQUIRE(fit.cv_mse.size() == 100);
  CHECK(std::find(fit.lambda_grid.begin(), fit.lambda_grid.end(), fit.lambda) != fit.lambda_grid.end());
  const auto best = std::min_element(fit.cv_mse.begin(), fit.cv_mse.end());
  CHECK(fit.lambda == fit.lambda_grid[static_cast<std::size_t>(best - fit.cv_mse.begin())]);
  const Eigen::Vector4d truth(0.7, 0.5, 0.5, 0.7);
  CHECK((fit.coefficients - truth).cwiseAbs().maxCoeff() < 0.05);

  RngStream again = derive_stream(26, 0, 0, purpose::kModel);
  const LassoFit replay = fit_lasso_cv(p.x, p.y, again);
  CHECK(replay.coefficients == fit.coefficients);
  CHECK(replay.cv_mse == fit.cv_mse);
}

TEST_CASE("ties in CV error favour the larger penalty") {
  // A constant target gives identical CV error at every penalty.
  const Problem p = linear_problem(27, 100, 0.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(100, 4.0);
  RngStream s = derive_stream(27, 0, 0, 0);
  LassoOptions opts;
  opts.lambda_grid = {0.5, 0.1, 0.01};
  const LassoFit fit = fit_lasso_cv(p.x, y, s, opts);
  CHECK(fit.lambda == 0.5);
  CHECK(fit.intercept == doctest::Approx(4.0));
}

TEST_CASE("constant columns are held at zero") {
  Problem p = linear_problem(28, 200, 1.0);
  p.x.col(3).setConstant(1.0);
  const LassoFit fit = fit_lasso(p.x, p.y, 0.0);
  CHECK(fit.scale(3) == 0.0);
  CHECK(fit.coefficients(3) == 0.0);
  CHECK(std::isfinite(fit.intercept));
}

TEST_CASE("lasso input validation") {
  RngStream s = derive_stream(1, 0, 0, 0);
  CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(4), 0.1), Error);
  CHECK_THROWS_AS(fit_lasso(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), -1.0), Error);
  LassoOptions opts;
  opts.folds = 1;
  CHECK_THROWS_AS(fit_lasso_cv(Eigen::MatrixXd::Random(20, 2), Eigen::VectorXd::Random(20), s, opts),
                  Error);
  CHECK_THROWS_AS(fit_lasso_cv(Eigen::MatrixXd::Random(5, 2), Eigen::VectorXd::Random(5), s), Error);
}

TEST_CASE("returned solution beats the zero vector and the least-squares solution") {
  const Problem p = linear_problem(29, 300, 2.0);
  LassoOptions tight;
  tight.tol = 1e-12;
  const LassoFit ols_like = fit_lasso(p.x, p.y, 0.0, tight);
  Eigen::MatrixXd z(p.x.rows(), p.x.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    z.col(j) = (p.x.col(j).array() - ols_like.center(j)) / ols_like.scale(j);
  }
  const GramSystem g = GramSystem::from_data(z, p.y.array() - p.y.mean());
  for (double frac : {0.01, 0.1, 0.5}) {
    const double lambda = frac * lambda_max(p.x, p.y);
    const LassoFit fit = fit_lasso(p.x, p.y, lambda, tight);
    const double at_fit = lasso_objective(g, fit.standardized_coefficients, lambda);
    CHECK(at_fit <= lasso_objective(g, Eigen::VectorXd::Zero(4), lambda) + 1e-12);
    CHECK(at_fit <= lasso_objective(g, ols_like.standardized_coefficients, lambda) + 1e-12);
  }
}
