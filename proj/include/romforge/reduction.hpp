#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "romforge/field.hpp"
#include "romforge/inner_product.hpp"
#include "romforge/parameter.hpp"

namespace romforge::reduction {

/// Basis size request: an explicit count, or the smallest count whose
/// cumulative energy reaches the threshold.
struct BasisSize {
    int count = -1;
    double energy = 1.0;

    static BasisSize fixed(int n) { return {n, 1.0}; }
    static BasisSize threshold(double e) { return {-1, e}; }
};

struct ReducedBasis {
    std::string family;
    std::vector<Field> modes;
    Eigen::VectorXd eigenvalues;  // retained spectrum, descending

    int count() const { return static_cast<int>(modes.size()); }
};

/// POD through the correlation matrix K_mn = inner(s_m, s_n); modes are
/// weighted snapshot combinations re-normalized in ip. Eigenvalues below
/// 1e-12 * lambda_1 are discarded as numerically zero.
ReducedBasis pod(const std::vector<Field>& snapshots, const InnerProduct& ip, BasisSize size,
                 std::string family);

/// Partial sums of the spectrum over its total.
Eigen::VectorXd cumulative_energy(const Eigen::VectorXd& eigenvalues);

/// Modified Gram-Schmidt with one re-orthogonalization pass. Inputs whose
/// residual norm falls below 1e-8 of their original norm are dropped; the
/// indices of dropped inputs are appended to `dropped` when provided.
std::vector<Field> gram_schmidt(const std::vector<Field>& fields, const InnerProduct& ip,
                                std::vector<int>* dropped = nullptr);

/// Sum over snapshots of the squared ip-distance to the span of `modes`
/// (modes must be ip-orthonormal).
double projection_error_sq(const std::vector<Field>& snapshots, const std::vector<Field>& modes,
                           const InnerProduct& ip);

/// Discrete supremizer problem: gram * s = coupling * p with zero values at
/// the constrained velocity DOFs. Branch-specific code supplies the matrices.
struct SupremizerProblem {
    MeshPtr mesh;
    Eigen::SparseMatrix<double> gram;      // velocity inner-product weight
    Eigen::SparseMatrix<double> coupling;  // pressure DOFs -> velocity test rhs
    std::vector<int> constrained;          // velocity DOFs pinned to zero
};

Field supremizer(const Field& p_mode, const SupremizerProblem& prob);

/// Greedy sampling callbacks. `solution_norm` scores a training sample for
/// the starting pick; `rom_error` evaluates the current bases at a sample and
/// returns the combined relative error driving the selection.
struct GreedyCallbacks {
    std::function<std::pair<Field, Field>(int)> snapshot;  // cached FOM (u, p) by index
    std::function<double(int, const std::vector<Field>&, const std::vector<Field>&)> rom_error;
};

struct GreedyResult {
    std::vector<Field> velocity_modes;
    std::vector<Field> pressure_modes;
    std::vector<int> selected;
    std::vector<double> max_errors;  // greedy objective before each enrichment
};

GreedyResult greedy_rb(const std::vector<ParameterSample>& training, const GreedyCallbacks& cb,
                       const InnerProduct& ip_u, const InnerProduct& ip_p, double tol, int n_max);

}  // namespace romforge::reduction
