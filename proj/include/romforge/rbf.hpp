#pragma once

#include <Eigen/Dense>
#include <vector>

#include "romforge/inner_product.hpp"

namespace romforge::rbf {

enum class KernelKind { Gaussian };

struct KernelConfig {
    KernelKind kind = KernelKind::Gaussian;
    /// Shape parameter; <= 0 selects 1 / median pairwise center distance.
    double epsilon = 0.0;
    double lambda_ridge = 0.0;
};

/// Interpolant of reduced coefficient rows over normalized parameter space:
/// output_i(mu) = sum_j weights(i,j) kernel(|mu - center_j|).
struct RBFModel {
    KernelKind kind = KernelKind::Gaussian;
    double epsilon = 1.0;
    double lambda_ridge = 0.0;
    Eigen::MatrixXd centers;  // N_s x dim, normalized coordinates
    Eigen::MatrixXd weights;  // N_out x N_s

    /// Pure evaluation; sets *extrapolated when mu leaves the unit box.
    Eigen::VectorXd eval(const Eigen::VectorXd& mu_normalized,
                         bool* extrapolated = nullptr) const;
};

double kernel_value(KernelKind kind, double epsilon, double r);

/// Coefficient table g(i, j) = (snapshot_j, mode_i) in the given inner
/// product; modes are expected orthonormal.
Eigen::MatrixXd project_viscosity(const std::vector<Field>& snapshots,
                                  const std::vector<Field>& modes, const InnerProduct& ip);

/// Per-row kernel system solve; throws ill-conditioned-kernel when the
/// (unridged) kernel matrix condition estimate exceeds 1e14.
RBFModel rbf_fit(const Eigen::MatrixXd& centers, const Eigen::MatrixXd& table,
                 const KernelConfig& cfg);

}  // namespace romforge::rbf
