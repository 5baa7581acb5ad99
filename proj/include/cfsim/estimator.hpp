#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "cfsim/datagen.hpp"
#include "cfsim/prng.hpp"
#include "cfsim/regressor.hpp"

namespace cfsim {

struct GroupSplit {
  Eigen::MatrixXd x_treated;
  Eigen::VectorXd y_treated;
  Eigen::MatrixXd x_control;
  Eigen::VectorXd y_control;
  double pi = 0.0;  // empirical treated fraction
};

// A fitted model reduced to batch prediction.
using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
using Fitter =
    std::function<Predictor(const Eigen::MatrixXd&, const Eigen::VectorXd&, RngStream&)>;

Fitter make_fitter(Method method, const ModelParams& params);

/// Partitions rows by treatment, keeping row order within each group.
GroupSplit split_by_treatment(const Dataset& d);

double naive_ate(const GroupSplit& split);

/// pi * (mean(y_t) - mean(yhat_t)) + (1 - pi) * (mean(yhat_c) - mean(y_c)),
/// where yhat_t are control-model predictions for the treated rows and
/// yhat_c treated-model predictions for the control rows.
double counterfactual_ate(const GroupSplit& split, const Eigen::VectorXd& yhat_treated,
                          const Eigen::VectorXd& yhat_control);

/// Fits one model per group (treated first) and cross-predicts.
double estimate_ate(const GroupSplit& split, const Fitter& fit, RngStream& stream);

/// |100 (ate_sim - ate_true) / ate_true|.
double pct_error(double ate_sim, double ate_true);

struct MethodEstimate {
  double ate = 0.0;
  double error_pct = 0.0;
};

struct AteEstimates {
  double pi_empirical = 0.0;
  // Indexed by Method; Naive is always present.
  std::array<std::optional<MethodEstimate>, kNumMethods> by_method;

  const std::optional<MethodEstimate>& operator[](Method m) const {
    return by_method[static_cast<std::size_t>(m)];
  }
};

/// Stream for a model's internal randomness within one replicate.
RngStream model_stream(const StreamProvenance& replicate, Method method, int attempt = 0);

/// Naive contrast plus one counterfactual estimate per requested model.
/// `replicate` supplies master seed, cell and replicate for the model streams.
AteEstimates estimate_all(const Dataset& d, double ate_true, std::span<const Method> methods,
                          const ModelParams& params, const StreamProvenance& replicate,
                          int attempt = 0);

}  // namespace cfsim
