#include "cfsim/estimator.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "cfsim/error.hpp"

namespace cfsim {

Fitter make_fitter(Method method, const ModelParams& params) {
  if (method == Method::Naive) {
    throw Error(ErrorCode::InvalidParameter, "make_fitter: Naive has no model");
  }
  return [method, params](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          RngStream& stream) -> Predictor {
    auto model = std::make_shared<const Regressor>(fit_regressor(method, x, y, params, stream));
    return [model](const Eigen::MatrixXd& rows) { return predict(*model, rows); };
  };
}

GroupSplit split_by_treatment(const Dataset& d) {
  const auto n = d.size();
  if (static_cast<std::size_t>(d.x.rows()) != n || static_cast<std::size_t>(d.y.size()) != n) {
    throw Error(ErrorCode::Shape, "split_by_treatment: x, t and y lengths differ");
  }
  std::vector<Eigen::Index> treated, control;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.t[i] != 0 && d.t[i] != 1) {
      throw Error(ErrorCode::InvalidData, "split_by_treatment: treatment must be 0 or 1");
    }
    (d.t[i] == 1 ? treated : control).push_back(static_cast<Eigen::Index>(i));
  }
  if (treated.empty() || control.empty()) {
    throw Error(ErrorCode::DegenerateSplit, "split_by_treatment: " + std::to_string(treated.size()) +
                                               " treated and " + std::to_string(control.size()) +
                                               " control rows");
  }
  GroupSplit s;
  s.x_treated = d.x(treated, Eigen::all);
  s.y_treated = d.y(treated);
  s.x_control = d.x(control, Eigen::all);
  s.y_control = d.y(control);
  s.pi = static_cast<double>(treated.size()) / static_cast<double>(n);
  return s;
}

double naive_ate(const GroupSplit& split) {
  return split.y_treated.mean() - split.y_control.mean();
}

double counterfactual_ate(const GroupSplit& split, const Eigen::VectorXd& yhat_treated,
                          const Eigen::VectorXd& yhat_control) {
  if (yhat_treated.size() != split.y_treated.size() ||
      yhat_control.size() != split.y_control.size()) {
    throw Error(ErrorCode::Shape, "counterfactual_ate: prediction lengths do not match groups");
  }
  const double treated_side = split.y_treated.mean() - yhat_treated.mean();
  const double control_side = yhat_control.mean() - split.y_control.mean();
  return split.pi * treated_side + (1.0 - split.pi) * control_side;
}

double estimate_ate(const GroupSplit& split, const Fitter& fit, RngStream& stream) {
  const Predictor treated_model = fit(split.x_treated, split.y_treated, stream);
  const Predictor control_model = fit(split.x_control, split.y_control, stream);
  return counterfactual_ate(split, control_model(split.x_treated), treated_model(split.x_control));
}

double pct_error(double ate_sim, double ate_true) {
  if (ate_true == 0.0) {
    throw Error(ErrorCode::DivisionByZero, "pct_error: ate_true is 0");
  }
  return std::abs(100.0 * (ate_sim - ate_true) / ate_true);
}

RngStream model_stream(const StreamProvenance& replicate, Method method, int attempt) {
  return derive_stream(replicate.master_seed, replicate.cell_index, replicate.replicate_index,
                       purpose::kModel + static_cast<std::uint64_t>(method) - 1 +
                           purpose::kRetryStride * static_cast<std::uint64_t>(attempt));
}

AteEstimates estimate_all(const Dataset& d, double ate_true, std::span<const Method> methods,
                          const ModelParams& params, const StreamProvenance& replicate,
                          int attempt) {
  const GroupSplit split = split_by_treatment(d);
  AteEstimates out;
  out.pi_empirical = split.pi;
  const double naive = naive_ate(split);
  out.by_method[static_cast<std::size_t>(Method::Naive)] = MethodEstimate{naive, pct_error(naive, ate_true)};
  for (Method m : methods) {
    if (m == Method::Naive) continue;
    RngStream stream = model_stream(replicate, m, attempt);
    const double ate = estimate_ate(split, make_fitter(m, params), stream);
    out.by_method[static_cast<std::size_t>(m)] = MethodEstimate{ate, pct_error(ate, ate_true)};
  }
  return out;
}

}  // namespace cfsim
