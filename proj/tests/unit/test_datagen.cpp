#include <doctest.h>

#include <vector>

#include "cfsim/datagen.hpp"
#include "cfsim/error.hpp"
#include "stats_oracles.hpp"

using namespace cfsim;
namespace t = cfsim::testing;

namespace {

std::vector<double> column(const Eigen::MatrixXd& x, int j) {
  return std::vector<double>(x.col(j).data(), x.col(j).data() + x.rows());
}

std::vector<double> as_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("covariate marginals follow the student-grade table") {
  RngStream s = derive_stream(1, 0, 0, purpose::kCovariates);
  const Eigen::MatrixXd x = generate_covariates(100000, CovariateSpec{}, s);
  REQUIRE(x.cols() == 4);
  const double m1 = x.col(0).mean();
  CHECK(m1 >= 49.95);
  CHECK(m1 <= 50.05);
  CHECK(x.col(1).minCoeff() >= 18.0);
  const double m4 = x.col(3).mean();
  CHECK(m4 >= 0.595);
  CHECK(m4 <= 0.605);
  const double m3 = x.col(2).mean();
  CHECK(m3 == doctest::Approx(45.0).epsilon(0.002));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    REQUIRE((x(i, 3) == 0.0 || x(i, 3) == 1.0));
  }
}

TEST_CASE("age floor: clamping piles mass at the floor, resampling does not") {
  CovariateSpec clamp;
  CovariateSpec resample;
  resample.age_floor_mode = AgeFloorMode::Resample;
  RngStream a = derive_stream(2, 0, 0, 0);
  RngStream b = derive_stream(2, 0, 0, 0);
  const Eigen::MatrixXd xc = generate_covariates(20000, clamp, a);
  const Eigen::MatrixXd xr = generate_covariates(20000, resample, b);
  const auto at_floor = [](const Eigen::MatrixXd& x) { return (x.col(1).array() == 18.0).count(); };
  // P(N(20, 2) < 18) = Phi(-1) ~= 0.159
  CHECK(at_floor(xc) / 20000.0 == doctest::Approx(t::normal_cdf(-1.0)).epsilon(0.1));
  CHECK(at_floor(xr) == 0);
  CHECK(xr.col(1).minCoeff() >= 18.0);
}

TEST_CASE("generate_covariates rejects an empty request") {
  RngStream s = derive_stream(1, 0, 0, 0);
  CHECK_THROWS_AS(generate_covariates(0, CovariateSpec{}, s), Error);
}

TEST_CASE("randomized assignment") {
  RngStream s = derive_stream(3, 0, 0, purpose::kTreatment);
  for (int v : assign_randomized(1000, 0.0, s)) CHECK(v == 0);
  for (int v : assign_randomized(1000, 1.0, s)) CHECK(v == 1);
  const auto tr = assign_randomized(100000, 0.3, s);
  const double frac = t::mean(as_double(tr));
  CHECK(frac >= 0.295);
  CHECK(frac <= 0.305);
  CHECK_THROWS_AS(assign_randomized(10, 1.5, s), Error);
  CHECK_THROWS_AS(assign_randomized(10, -0.5, s), Error);
}

TEST_CASE("confounded assignment follows the threshold rule") {
  RngStream s = derive_stream(4, 0, 0, purpose::kTreatment);
  Eigen::VectorXd x3(3);
  x3 << 30, 60, 40.9;
  CHECK(assign_confounded(x3, ConfoundedAssignment{}, s) == std::vector<int>{1, 0, 1});

  const Eigen::VectorXd mid = Eigen::VectorXd::Constant(100000, 45.0);
  const double frac_mid = t::mean(as_double(assign_confounded(mid, ConfoundedAssignment{}, s)));
  CHECK(frac_mid >= 0.495);
  CHECK(frac_mid <= 0.505);

  // Phi(-2/3) + 0.5 (Phi(2/3) - Phi(-2/3)) = 0.5 by symmetry about 45.
  const double oracle = t::normal_cdf(-4.0 / 6.0) +
                        0.5 * (t::normal_cdf(4.0 / 6.0) - t::normal_cdf(-4.0 / 6.0));
  CHECK(oracle == doctest::Approx(0.5));
  RngStream c = derive_stream(4, 0, 0, purpose::kCovariates);
  const Eigen::MatrixXd x = generate_covariates(100000, CovariateSpec{}, c);
  const double frac = t::mean(as_double(assign_confounded(x.col(2), ConfoundedAssignment{}, s)));
  CHECK(frac >= 0.495);
  CHECK(frac <= 0.505);

  // Boundaries belong to the coin-flip region.
  Eigen::VectorXd edges = Eigen::VectorXd::Constant(4000, 41.0);
  edges.tail(2000).setConstant(49.0);
  const auto te = assign_confounded(edges, ConfoundedAssignment{}, s);
  const double lower = t::mean(std::vector<double>(te.begin(), te.begin() + 2000));
  const double upper = t::mean(std::vector<double>(te.begin() + 2000, te.end()));
  CHECK(lower > 0.4);
  CHECK(lower < 0.6);
  CHECK(upper > 0.4);
  CHECK(upper < 0.6);

  CHECK_THROWS_AS(assign_confounded(x3, ConfoundedAssignment{49, 41, 0.5}, s), Error);
}

TEST_CASE("outcome equation, noise free") {
  Eigen::MatrixXd x(1, 4);
  x << 50, 20, 45, 1;
  OutcomeParams p;
  p.noise_sd = 0.0;
  p.ate_true = 5.0;
  RngStream s = derive_stream(5, 0, 0, purpose::kOutcomeNoise);
  // 0.5 + 0.7*50 + 0.5*20 + 0.5*45 + 0.7*1 + 5 = 73.7
  CHECK(generate_outcome(x, {1}, p, s)(0) == doctest::Approx(73.7).epsilon(1e-14));
  p.degree = 2;
  // 0.5 + 0.7*2500 + 10 + 22.5 + 0.7 = 1783.7
  CHECK(generate_outcome(x, {0}, p, s)(0) == doctest::Approx(1783.7).epsilon(1e-14));
  p.degree = 3;
  CHECK(generate_outcome(x, {0}, p, s)(0) == doctest::Approx(0.5 + 0.7 * 125000 + 10 + 22.5 + 0.7).epsilon(1e-14));

  // Treatment shifts every row by exactly ate_true.
  RngStream c = derive_stream(5, 0, 0, purpose::kCovariates);
  const Eigen::MatrixXd xs = generate_covariates(200, CovariateSpec{}, c);
  for (int degree = 1; degree <= 3; ++degree) {
    p.degree = degree;
    p.ate_true = -7.25;
    const Eigen::VectorXd y1 = generate_outcome(xs, std::vector<int>(200, 1), p, s);
    const Eigen::VectorXd y0 = generate_outcome(xs, std::vector<int>(200, 0), p, s);
    CHECK(((y1 - y0).array() - p.ate_true).abs().maxCoeff() < 1e-9 * y0.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("outcome noise has the configured spread") {
  RngStream c = derive_stream(6, 0, 0, purpose::kCovariates);
  const Eigen::MatrixXd x = generate_covariates(50000, CovariateSpec{}, c);
  OutcomeParams p;
  OutcomeParams quiet = p;
  quiet.noise_sd = 0.0;
  RngStream s = derive_stream(6, 0, 0, purpose::kOutcomeNoise);
  const std::vector<int> tr(50000, 0);
  const Eigen::VectorXd noise = generate_outcome(x, tr, p, s) - generate_outcome(x, tr, quiet, s);
  std::vector<double> v(noise.data(), noise.data() + noise.size());
  CHECK(t::sd(v) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(t::mean(v)) < 0.02);
}

TEST_CASE("generate_outcome validates shapes and parameters") {
  RngStream s = derive_stream(1, 0, 0, 0);
  CHECK_THROWS_AS(generate_outcome(Eigen::MatrixXd(3, 4), {0, 1}, OutcomeParams{}, s), Error);
  CHECK_THROWS_AS(generate_outcome(Eigen::MatrixXd::Zero(2, 3), {0, 1}, OutcomeParams{}, s), Error);
  OutcomeParams bad;
  bad.degree = 4;
  CHECK_THROWS_AS(generate_outcome(Eigen::MatrixXd::Zero(2, 4), {0, 1}, bad, s), Error);
}

TEST_CASE("generate_dataset is deterministic and purpose-isolated") {
  DgpSpec spec;
  spec.master_seed = 42;
  spec.cell_index = 3;
  spec.outcome.ate_true = 5.0;
  const Dataset a = generate_dataset(spec, 7);
  const Dataset b = generate_dataset(spec, 7);
  CHECK(a.x == b.x);
  CHECK(a.t == b.t);
  CHECK(a.y == b.y);
  const Dataset other = generate_dataset(spec, 8);
  CHECK(a.x != other.x);

  // Outcome parameters never reach the covariate or treatment streams.
  DgpSpec changed = spec;
  changed.outcome.ate_true = -10.0;
  changed.outcome.degree = 3;
  const Dataset c = generate_dataset(changed, 7);
  CHECK(a.x == c.x);
  CHECK(a.t == c.t);

  // A retry draws fresh data.
  const Dataset retry = generate_dataset(spec, 7, 1);
  CHECK(retry.x != a.x);
}

TEST_CASE("generate_dataset treated counts") {
  DgpSpec spec;
  spec.master_seed = 9;
  spec.treatment = RandomizedAssignment{0.5};
  for (std::uint64_t r = 0; r < 20; ++r) {
    const Dataset d = generate_dataset(spec, r);
    const double treated = t::mean(as_double(d.t)) * 1000.0;
    CHECK(treated >= 440);
    CHECK(treated <= 560);
  }
  spec.treatment = ConfoundedAssignment{};
  const Dataset d = generate_dataset(spec, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.x(static_cast<Eigen::Index>(i), 2) < 41.0) REQUIRE(d.t[i] == 1);
    if (d.x(static_cast<Eigen::Index>(i), 2) > 49.0) REQUIRE(d.t[i] == 0);
  }
}

TEST_CASE("degenerate splits raise") {
  DgpSpec spec;
  spec.n = 50;
  spec.treatment = RandomizedAssignment{1.0};
  try {
    generate_dataset(spec, 0);
    FAIL("expected a degenerate split");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSplit);
  }
}

TEST_CASE("randomized assignment is uncorrelated with covariates; confounding is not") {
  DgpSpec spec;
  spec.master_seed = 17;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const Dataset d = generate_dataset(spec, r);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(t::correlation(column(d.x, j), as_double(d.t))) < 0.1);
    }
  }
  spec.treatment = ConfoundedAssignment{};
  for (std::uint64_t r = 0; r < 5; ++r) {
    const Dataset d = generate_dataset(spec, r);
    double s1 = 0, s0 = 0;
    int n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = d.x(static_cast<Eigen::Index>(i), 2);
      if (d.t[i]) {
        s1 += v;
        ++n1;
      } else {
        s0 += v;
        ++n0;
      }
    }
    CHECK(s0 / n0 - s1 / n1 > 3.0);
  }
}
