#pragma once

#include <Eigen/Dense>

namespace hmflow {

/// Ambient vector of a target or source embedding; never more than three components.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Vec3 = Eigen::Vector3d;

/// Values sampled on a chart grid: one row per grid node, one column per component.
using NodalField = Eigen::MatrixXd;

}  // namespace hmflow
