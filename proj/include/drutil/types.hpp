#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace drutil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace drutil
