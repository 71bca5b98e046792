#pragma once

#include <Eigen/Dense>

namespace fluxldp {

/// Lawson–Hanson active-set solution of argmin ‖A x − b‖₂ subject to x ≥ 0.
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace fluxldp
