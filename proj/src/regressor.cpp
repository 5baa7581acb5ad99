#include "cfsim/regressor.hpp"

#include "cfsim/error.hpp"

namespace cfsim {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Naive: return "Naive";
    case Method::LM: return "LM";
    case Method::Lasso: return "Lasso";
    case Method::RF: return "RF";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

Regressor fit_regressor(Method method, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const ModelParams& params, RngStream& stream) {
  switch (method) {
    case Method::LM: return fit_ols(x, y);
    case Method::Lasso: return fit_lasso_cv(x, y, stream, params.lasso);
    case Method::RF: return fit_forest(x, y, params.forest, stream);
    case Method::Naive: break;
  }
  throw Error(ErrorCode::InvalidParameter, "fit_regressor: Naive has no model");
}

double predict_row(const Regressor& model, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return std::visit([&](const auto& fit) { return predict_row(fit, row); }, model);
}

Eigen::VectorXd predict(const Regressor& model, const Eigen::MatrixXd& x) {
  return std::visit([&](const auto& fit) { return predict(fit, x); }, model);
}

}  // namespace cfsim
