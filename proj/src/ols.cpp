#include "cfsim/ols.hpp"

#include <string>

#include "cfsim/error.hpp"

namespace cfsim {

LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::Shape, "fit_ols: x has " + std::to_string(x.rows()) + " rows but y has " +
                                      std::to_string(y.size()));
  }
  if (x.rows() < x.cols() + 1) {
    throw Error(ErrorCode::InsufficientData, "fit_ols: need at least cols + 1 = " +
                                                 std::to_string(x.cols() + 1) + " rows, got " +
                                                 std::to_string(x.rows()));
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::InvalidData, "fit_ols: non-finite input");
  }

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  LinearFit fit;
  if (x.cols() == 0) {
    fit.intercept = y_mean;
    return fit;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  // Scale-aware rank test relative to the largest pivot.
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    throw Error(ErrorCode::SingularDesign, "fit_ols: design has rank " + std::to_string(qr.rank()) +
                                               " < " + std::to_string(x.cols()) +
                                               " after centering");
  }
  fit.coefficients = qr.solve(yc);
  fit.intercept = y_mean - x_mean.dot(fit.coefficients);
  return fit;
}

double predict_row(const LinearFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != fit.coefficients.size()) {
    throw Error(ErrorCode::Shape, "predict: row has " + std::to_string(row.size()) +
                                      " entries, model expects " +
                                      std::to_string(fit.coefficients.size()));
  }
  return fit.intercept + row.dot(fit.coefficients);
}

Eigen::VectorXd predict(const LinearFit& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.coefficients.size()) {
    throw Error(ErrorCode::Shape, "predict: design has " + std::to_string(x.cols()) +
                                      " columns, model expects " +
                                      std::to_string(fit.coefficients.size()));
  }
  return (x * fit.coefficients).array() + fit.intercept;
}

}  // namespace cfsim
