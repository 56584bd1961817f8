#pragma once

#include <Eigen/Dense>
#include <vector>

#include "romforge/errors.hpp"

namespace romforge {

/// Compact axis-aligned parameter box. Normalization maps each component
/// affinely onto [0,1]; degenerate axes (lo == hi) map to 0.
struct ParameterBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Eigen::VectorXd& mu, double slack = 1e-12) const {
        if (mu.size() != lo.size()) return false;
        for (int k = 0; k < mu.size(); ++k) {
            const double s = slack * std::max(1.0, std::abs(hi[k] - lo[k]));
            if (mu[k] < lo[k] - s || mu[k] > hi[k] + s) return false;
        }
        return true;
    }

    Eigen::VectorXd normalize(const Eigen::VectorXd& mu) const {
        if (mu.size() != lo.size())
            throw Error(ErrorCode::InvalidConfig, "parameter dimension mismatch");
        Eigen::VectorXd z(mu.size());
        for (int k = 0; k < mu.size(); ++k) {
            const double span = hi[k] - lo[k];
            z[k] = span > 0.0 ? (mu[k] - lo[k]) / span : 0.0;
        }
        return z;
    }

    Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const {
        if (z.size() != lo.size())
            throw Error(ErrorCode::InvalidConfig, "parameter dimension mismatch");
        return lo.array() + z.array() * (hi - lo).array();
    }
};

struct ParameterSample {
    Eigen::VectorXd mu;
    Eigen::VectorXd normalized;  // empty until attached to a box

    ParameterSample() = default;
    explicit ParameterSample(Eigen::VectorXd m) : mu(std::move(m)) {}
    ParameterSample(Eigen::VectorXd m, const ParameterBox& box)
        : mu(std::move(m)), normalized(box.normalize(mu)) {}
};

/// Uniform tensor grid over the box, counts per dimension, row-major with the
/// first dimension fastest. A count of 1 places the sample at the box center.
std::vector<ParameterSample> uniform_grid(const ParameterBox& box,
                                          const std::vector<int>& counts);

/// Evenly spaced samples along a 1D box (count >= 2 hits both endpoints).
std::vector<ParameterSample> uniform_line(const ParameterBox& box, int count);

}  // namespace romforge
