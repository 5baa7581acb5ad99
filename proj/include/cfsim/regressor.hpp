#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "cfsim/forest.hpp"
#include "cfsim/lasso.hpp"
#include "cfsim/ols.hpp"
#include "cfsim/prng.hpp"

namespace cfsim {

// Naive is the group-mean contrast; it is reported alongside the models but
// has no regressor.
enum class Method { Naive = 0, LM = 1, Lasso = 2, RF = 3 };

inline constexpr std::size_t kNumMethods = 4;
inline constexpr Method kAllMethods[] = {Method::Naive, Method::LM, Method::Lasso, Method::RF};
inline constexpr Method kModelMethods[] = {Method::LM, Method::Lasso, Method::RF};

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct ModelParams {
  LassoOptions lasso;
  ForestParams forest;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Regressor = std::variant<LinearFit, LassoFit, ForestFit>;

Regressor fit_regressor(Method method, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const ModelParams& params, RngStream& stream);

double predict_row(const Regressor& model, const Eigen::Ref<const Eigen::RowVectorXd>& row);
Eigen::VectorXd predict(const Regressor& model, const Eigen::MatrixXd& x);

}  // namespace cfsim
