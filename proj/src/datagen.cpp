#include "cfsim/datagen.hpp"

#include <cmath>
#include <string>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

void require_normal(const NormalSpec& spec, const char* name) {
  if (!(spec.sd > 0.0) || !std::isfinite(spec.sd) || !std::isfinite(spec.mu)) {
    throw Error(ErrorCode::InvalidParameter,
                std::string("covariates.") + name + ": sd must be positive and finite");
  }
}

void require_probability(double p, const std::string& name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, name + " must lie in [0, 1], got " + std::to_string(p));
  }
}

double power(double v, int degree) {
  switch (degree) {
    case 1: return v;
    case 2: return v * v;
    default: return v * v * v;
  }
}

}  // namespace

void CovariateSpec::validate() const {
  require_normal(grade1, "x1");
  require_normal(age, "x2");
  require_normal(grade2, "x3");
  require_probability(gender_p, "covariates.x4_p");
  if (!std::isfinite(age_floor)) {
    throw Error(ErrorCode::InvalidParameter, "covariates.x2_floor must be finite");
  }
}

void OutcomeParams::validate() const {
  if (degree < 1 || degree > 3) {
    throw Error(ErrorCode::InvalidParameter,
                "outcome.degree must be 1, 2 or 3, got " + std::to_string(degree));
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw Error(ErrorCode::InvalidParameter, "outcome.noise_sd must be finite and >= 0");
  }
  for (double b : betas) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidParameter, "outcome.betas must be finite");
  }
  if (!std::isfinite(ate_true)) {
    throw Error(ErrorCode::InvalidParameter, "outcome.ate_true must be finite");
  }
}

void validate(const TreatmentRule& rule) {
  if (const auto* r = std::get_if<RandomizedAssignment>(&rule)) {
    require_probability(r->pi, "pi");
    return;
  }
  const auto& c = std::get<ConfoundedAssignment>(rule);
  if (!(c.lower < c.upper)) {
    throw Error(ErrorCode::InvalidParameter, "confounding_rule: lower must be < upper");
  }
  require_probability(c.mid_prob, "confounding_rule.mid_prob");
}

Eigen::MatrixXd generate_covariates(std::size_t n, const CovariateSpec& spec, RngStream& stream) {
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "generate_covariates: n must be >= 1");
  spec.validate();
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(rows, kNumCovariates);
  for (Eigen::Index i = 0; i < rows; ++i) x(i, 0) = sample_normal(stream, spec.grade1.mu, spec.grade1.sd);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double age = sample_normal(stream, spec.age.mu, spec.age.sd);
    if (spec.age_floor_mode == AgeFloorMode::Clamp) {
      age = std::max(spec.age_floor, age);
    } else {
      while (age < spec.age_floor) age = sample_normal(stream, spec.age.mu, spec.age.sd);
    }
    x(i, 1) = age;
  }
  for (Eigen::Index i = 0; i < rows; ++i) x(i, 2) = sample_normal(stream, spec.grade2.mu, spec.grade2.sd);
  for (Eigen::Index i = 0; i < rows; ++i) x(i, 3) = sample_bernoulli(stream, spec.gender_p);
  return x;
}

std::vector<int> assign_randomized(std::size_t n, double pi, RngStream& stream) {
  require_probability(pi, "pi");
  std::vector<int> t(n);
  for (auto& ti : t) ti = sample_bernoulli(stream, pi);
  return t;
}

std::vector<int> assign_confounded(const Eigen::Ref<const Eigen::VectorXd>& x3,
                                   const ConfoundedAssignment& rule, RngStream& stream) {
  validate(TreatmentRule{rule});
  std::vector<int> t(static_cast<std::size_t>(x3.size()));
  for (Eigen::Index i = 0; i < x3.size(); ++i) {
    const double v = x3(i);
    if (v < rule.lower) {
      t[i] = 1;
    } else if (v > rule.upper) {
      t[i] = 0;
    } else {
      t[i] = sample_bernoulli(stream, rule.mid_prob);
    }
  }
  return t;
}

Eigen::VectorXd generate_outcome(const Eigen::MatrixXd& x, const std::vector<int>& t,
                                 const OutcomeParams& params, RngStream& stream) {
  if (x.cols() != kNumCovariates || static_cast<std::size_t>(x.rows()) != t.size()) {
    throw Error(ErrorCode::Shape, "generate_outcome: expected n x 4 covariates and n treatments, got " +
                                      std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                      " and " + std::to_string(t.size()));
  }
  params.validate();
  const auto& b = params.betas;
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double v = b[0] + b[1] * power(x(i, 0), params.degree) + b[2] * x(i, 1) + b[3] * x(i, 2) +
               b[4] * x(i, 3) + params.ate_true * t[i];
    if (params.noise_sd > 0.0) v += sample_normal(stream, 0.0, params.noise_sd);
    y(i) = v;
  }
  return y;
}

Dataset generate_dataset(const DgpSpec& spec, std::uint64_t replicate_index, int attempt) {
  validate(spec.treatment);
  const std::uint64_t shift = purpose::kRetryStride * static_cast<std::uint64_t>(attempt);
  auto stream_for = [&](std::uint64_t tag) {
    return derive_stream(spec.master_seed, spec.cell_index, replicate_index, tag + shift);
  };

  Dataset d;
  auto cov_stream = stream_for(purpose::kCovariates);
  d.x = generate_covariates(spec.n, spec.covariates, cov_stream);

  auto treat_stream = stream_for(purpose::kTreatment);
  if (const auto* r = std::get_if<RandomizedAssignment>(&spec.treatment)) {
    d.t = assign_randomized(spec.n, r->pi, treat_stream);
  } else {
    d.t = assign_confounded(d.x.col(2), std::get<ConfoundedAssignment>(spec.treatment), treat_stream);
  }

  auto noise_stream = stream_for(purpose::kOutcomeNoise);
  d.y = generate_outcome(d.x, d.t, spec.outcome, noise_stream);

  std::size_t treated = 0;
  for (int ti : d.t) treated += static_cast<std::size_t>(ti);
  if (treated == 0 || treated == d.t.size()) {
    throw Error(ErrorCode::DegenerateSplit,
                "generate_dataset: replicate " + std::to_string(replicate_index) + " has " +
                    std::to_string(treated) + " treated of " + std::to_string(d.t.size()));
  }
  return d;
}

}  // namespace cfsim
