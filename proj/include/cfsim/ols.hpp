#pragma once

#include <Eigen/Dense>

namespace cfsim {

struct LinearFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
};

/// Least squares with an unpenalized intercept.
///
/// Columns and target are centered, then the slope problem is solved with a
/// column-pivoting Householder QR. Throws InsufficientData when
/// rows < cols + 1, InvalidData on non-finite input and SingularDesign when
/// the centered design is rank deficient.
LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

double predict_row(const LinearFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row);
Eigen::VectorXd predict(const LinearFit& fit, const Eigen::MatrixXd& x);

}  // namespace cfsim
