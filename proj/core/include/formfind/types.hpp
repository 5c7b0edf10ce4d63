#pragma once

#include <Eigen/Core>

namespace formfind {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One row per node, columns x, y, z.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

using Vec3 = Eigen::Vector3d;

}  // namespace formfind
