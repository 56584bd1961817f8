#pragma once

#include <Eigen/Dense>

namespace romforge {

/// Settings shared by the reduced Newton solvers of both branches.
struct NewtonConfig {
    double tol = 1e-10;
    int max_iter = 100;
    Eigen::VectorXd initial;  // optional warm start, layout per system
};

}  // namespace romforge
