#pragma once

#include <Eigen/Dense>

namespace tio {

// All computation after load happens in double precision.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace tio
