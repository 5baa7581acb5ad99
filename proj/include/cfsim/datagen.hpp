#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cfsim/prng.hpp"

namespace cfsim {

inline constexpr int kNumCovariates = 4;

struct NormalSpec {
  double mu = 0.0;
  double sd = 1.0;

  friend bool operator==(const NormalSpec&, const NormalSpec&) = default;
};

enum class AgeFloorMode { Clamp, Resample };

// Student-grade covariates: two grades, age, and a binary gender flag.
struct CovariateSpec {
  NormalSpec grade1{50.0, 5.0};
  NormalSpec age{20.0, 2.0};
  double age_floor = 18.0;
  AgeFloorMode age_floor_mode = AgeFloorMode::Clamp;
  NormalSpec grade2{45.0, 6.0};
  double gender_p = 0.6;

  void validate() const;

  friend bool operator==(const CovariateSpec&, const CovariateSpec&) = default;
};

struct OutcomeParams {
  // Intercept followed by the x1..x4 coefficients.
  std::array<double, 5> betas{0.5, 0.7, 0.5, 0.5, 0.7};
  double ate_true = 0.0;
  int degree = 1;  // exponent applied to x1
  double noise_sd = 1.0;

  void validate() const;

  friend bool operator==(const OutcomeParams&, const OutcomeParams&) = default;
};

struct RandomizedAssignment {
  double pi = 0.5;

  friend bool operator==(const RandomizedAssignment&, const RandomizedAssignment&) = default;
};

// Treat below `lower`, never treat above `upper`, coin flip on [lower, upper].
struct ConfoundedAssignment {
  double lower = 41.0;
  double upper = 49.0;
  double mid_prob = 0.5;

  friend bool operator==(const ConfoundedAssignment&, const ConfoundedAssignment&) = default;
};

using TreatmentRule = std::variant<RandomizedAssignment, ConfoundedAssignment>;

void validate(const TreatmentRule& rule);

struct Dataset {
  Eigen::MatrixXd x;   // n x 4, columns x1..x4
  std::vector<int> t;  // 0/1
  Eigen::VectorXd y;

  std::size_t size() const noexcept { return t.size(); }
};

/// Everything needed to generate one replicate of one simulation cell.
struct DgpSpec {
  CovariateSpec covariates;
  OutcomeParams outcome;
  TreatmentRule treatment = RandomizedAssignment{};
  std::size_t n = 1000;
  std::uint64_t master_seed = 0;
  std::uint64_t cell_index = 0;
};

Eigen::MatrixXd generate_covariates(std::size_t n, const CovariateSpec& spec, RngStream& stream);

std::vector<int> assign_randomized(std::size_t n, double pi, RngStream& stream);

std::vector<int> assign_confounded(const Eigen::Ref<const Eigen::VectorXd>& x3,
                                   const ConfoundedAssignment& rule, RngStream& stream);

Eigen::VectorXd generate_outcome(const Eigen::MatrixXd& x, const std::vector<int>& t,
                                 const OutcomeParams& params, RngStream& stream);

/// Generates replicate `replicate_index` of the cell. `attempt` > 0 selects
/// the retry streams used after a degenerate split.
///
/// Throws ErrorCode::DegenerateSplit when either treatment group is empty.
Dataset generate_dataset(const DgpSpec& spec, std::uint64_t replicate_index, int attempt = 0);

}  // namespace cfsim
