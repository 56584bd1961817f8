#include "romforge/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace romforge::rbf {

namespace detail {

// Total order on center rows. Duplicate rows are rejected at fit time, so the
// index tie-break never fires for fitted models.
std::vector<Eigen::Index> lexicographic_order(const Eigen::MatrixXd& centers) {
    std::vector<Eigen::Index> order(static_cast<size_t>(centers.rows()));
    for (Eigen::Index i = 0; i < centers.rows(); ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index d = 0; d < centers.cols(); ++d) {
            if (centers(a, d) < centers(b, d)) return true;
            if (centers(a, d) > centers(b, d)) return false;
        }
        return a < b;
    });
    return order;
}

}  // namespace detail

double kernel_value(KernelKind kind, double epsilon, double r) {
    (void)kind;  // Gaussian is the only kernel
    const double s = epsilon * r;
    return std::exp(-s * s);
}

Eigen::VectorXd RBFModel::eval(const Eigen::VectorXd& mu_normalized, bool* extrapolated) const {
    if (mu_normalized.size() != centers.cols())
        throw Error(ErrorCode::InvalidConfig, "rbf eval: parameter dimension mismatch");
    if (extrapolated) {
        *extrapolated = false;
        for (Eigen::Index d = 0; d < mu_normalized.size(); ++d)
            if (mu_normalized[d] < -1e-12 || mu_normalized[d] > 1.0 + 1e-12) *extrapolated = true;
    }
    Eigen::VectorXd zeta(centers.rows());
    for (Eigen::Index j = 0; j < centers.rows(); ++j)
        zeta[j] = kernel_value(kind, epsilon,
                               (mu_normalized.transpose() - centers.row(j)).norm());
    // Accumulate in a canonical center order so the result does not depend on
    // how the caller ordered the centers (the weighted terms can be large and
    // cancelling, which makes plain summation order-sensitive).
    const std::vector<Eigen::Index> order = detail::lexicographic_order(centers);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(weights.rows());
    for (Eigen::Index j = 0; j < centers.rows(); ++j)
        out += weights.col(order[j]) * zeta[order[j]];
    return out;
}

Eigen::MatrixXd project_viscosity(const std::vector<Field>& snapshots,
                                  const std::vector<Field>& modes, const InnerProduct& ip) {
    if (snapshots.empty() || modes.empty())
        throw Error(ErrorCode::EmptySnapshots, "project_viscosity needs snapshots and modes");
    Eigen::MatrixXd g(static_cast<Eigen::Index>(modes.size()),
                      static_cast<Eigen::Index>(snapshots.size()));
    for (size_t j = 0; j < snapshots.size(); ++j)
        for (size_t i = 0; i < modes.size(); ++i)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                ip(snapshots[j], modes[i]);
    return g;
}

RBFModel rbf_fit(const Eigen::MatrixXd& centers, const Eigen::MatrixXd& table,
                 const KernelConfig& cfg) {
    const Eigen::Index ns = centers.rows();
    if (ns == 0) throw Error(ErrorCode::InvalidConfig, "rbf_fit: no centers");
    if (table.cols() != ns)
        throw Error(ErrorCode::InvalidConfig, "rbf_fit: table column count != center count");

    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(ns * (ns - 1) / 2));
    for (Eigen::Index i = 0; i < ns; ++i)
        for (Eigen::Index j = i + 1; j < ns; ++j) {
            const double d = (centers.row(i) - centers.row(j)).norm();
            if (d == 0.0)
                throw Error(ErrorCode::InvalidConfig, "rbf_fit: duplicate centers");
            dists.push_back(d);
        }

    RBFModel model;
    model.kind = cfg.kind;
    model.lambda_ridge = cfg.lambda_ridge;
    model.centers = centers;
    if (cfg.epsilon > 0.0) {
        model.epsilon = cfg.epsilon;
    } else if (dists.empty()) {
        model.epsilon = 1.0;
    } else {
        std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
        model.epsilon = 1.0 / dists[dists.size() / 2];
    }

    // Solve in a canonical (lexicographic) center order so the computed
    // weights do not depend on the order the caller supplies centers in.
    const std::vector<Eigen::Index> order = detail::lexicographic_order(centers);

    Eigen::MatrixXd phi(ns, ns);
    for (Eigen::Index i = 0; i < ns; ++i)
        for (Eigen::Index j = 0; j < ns; ++j)
            phi(i, j) = kernel_value(model.kind, model.epsilon,
                                     (centers.row(order[i]) - centers.row(order[j])).norm());

    if (cfg.lambda_ridge == 0.0) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (smin <= 0.0 || smax / smin > 1e14)
            throw Error(ErrorCode::IllConditionedKernel,
                        "kernel matrix condition estimate exceeds 1e14; raise lambda_ridge or "
                        "lower epsilon");
    } else {
        phi.diagonal().array() += cfg.lambda_ridge;
    }

    const Eigen::LLT<Eigen::MatrixXd> llt(phi);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::IllConditionedKernel, "kernel matrix not positive definite");

    model.weights.resize(table.rows(), ns);
    Eigen::VectorXd rhs(ns);
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        for (Eigen::Index j = 0; j < ns; ++j) rhs[j] = table(i, order[j]);
        const Eigen::VectorXd w = llt.solve(rhs);
        for (Eigen::Index j = 0; j < ns; ++j) model.weights(i, order[j]) = w[j];
    }
    return model;
}

}  // namespace romforge::rbf
