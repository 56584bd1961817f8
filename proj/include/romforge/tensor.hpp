#pragma once

#include <Eigen/Dense>

#include "romforge/errors.hpp"

namespace romforge {

/// Dense third-order tensor, row-major over (d0, d1, d2).
struct Tensor3 {
    int d0 = 0, d1 = 0, d2 = 0;
    Eigen::VectorXd v;

    Tensor3() = default;
    Tensor3(int a, int b, int c)
        : d0(a), d1(b), d2(c),
          v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a) * b * c)) {}

    double& operator()(int i, int j, int k) {
        return v[(static_cast<Eigen::Index>(i) * d1 + j) * d2 + k];
    }
    double operator()(int i, int j, int k) const {
        return v[(static_cast<Eigen::Index>(i) * d1 + j) * d2 + k];
    }
    bool empty() const { return v.size() == 0; }
};

/// Dense fourth-order tensor, row-major over (d0, d1, d2, d3).
struct Tensor4 {
    int d0 = 0, d1 = 0, d2 = 0, d3 = 0;
    Eigen::VectorXd v;

    Tensor4() = default;
    Tensor4(int a, int b, int c, int d)
        : d0(a), d1(b), d2(c), d3(d),
          v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a) * b * c * d)) {}

    double& operator()(int i, int j, int k, int l) {
        return v[((static_cast<Eigen::Index>(i) * d1 + j) * d2 + k) * d3 + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return v[((static_cast<Eigen::Index>(i) * d1 + j) * d2 + k) * d3 + l];
    }
    bool empty() const { return v.size() == 0; }
};

}  // namespace romforge
