#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <optional>

#include "romforge/field.hpp"
#include "romforge/inner_product.hpp"

namespace romforge::fe {

/// Residual-based stabilization parameters. gamma picks the classic variant
/// (0, 1, -1); for P1 elements the gamma-dependent Laplacian test term
/// vanishes element-wise, so all three produce the same assembled system.
struct StabilizationConfig {
    int gamma = 0;
    double delta = 1.0;
    double delta_cap = 10.0;

    void validate() const {
        if (gamma != 0 && gamma != 1 && gamma != -1)
            throw Error(ErrorCode::InvalidStabilization, "gamma must be 0, 1 or -1");
        if (!(delta > 0.0) || delta > delta_cap)
            throw Error(ErrorCode::InvalidStabilization, "delta must satisfy 0 < delta <= cap");
    }
};

using BodyForce = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;

struct FESolverConfig {
    StabilizationConfig stab;
    double picard_tol = 1e-9;
    int picard_max = 200;
    double relax = 1.0;
    double lid_speed = 1.0;
    BodyForce body_force;  // zero when absent
};

/// Assembled blocks of the linearized stabilized system. Velocity DOFs are
/// interleaved (2 per node), pressure DOFs are nodal scalars. Stabilization
/// blocks carry the delta * h_K^2 scaling already.
struct FEOperatorSet {
    double nu = 0.0;
    Eigen::SparseMatrix<double> diffusion;      // nu (grad u, grad v)
    Eigen::SparseMatrix<double> convection;     // (w . grad u, v)
    Eigen::SparseMatrix<double> pressure_grad;  // -(p, div v)
    Eigen::SparseMatrix<double> divergence;     // (q, div u)
    Eigen::SparseMatrix<double> stab_uu;        // d h^2 (w.grad u, w.grad v)
    Eigen::SparseMatrix<double> stab_up;        // d h^2 (grad p, w.grad v)
    Eigen::SparseMatrix<double> stab_pu;        // d h^2 (w.grad u, grad q)
    Eigen::SparseMatrix<double> stab_pp;        // d h^2 (grad p, grad q)
    Eigen::VectorXd rhs_u;                      // (f, v) + d h^2 (f, w.grad v)
    Eigen::VectorXd rhs_p;                      // d h^2 (f, grad q)
    Eigen::VectorXd pressure_integral;          // row vector of the zero-mean gauge
    std::vector<std::pair<int, double>> dirichlet;  // velocity DOF -> value
};

/// Velocity Dirichlet values implied by the facet tags: Inlet nodes move with
/// the lid (corners included), Wall-only nodes are pinned to zero.
std::vector<std::pair<int, double>> dirichlet_values(const Mesh& mesh, double lid_speed);

FEOperatorSet assemble_fe(const MeshPtr& mesh, double nu, const StabilizationConfig& stab,
                          const Field& linearization_state, double lid_speed = 1.0,
                          const BodyForce& body_force = nullptr);

struct FESolution {
    Field velocity;
    Field pressure;
    int iterations = 0;
    double residual = 0.0;
    /// Norm of the stabilized continuity rows at the converged state. The raw
    /// elementwise divergence of equal-order P1/P1 is only O(h); the quantity
    /// the scheme actually drives to zero is this discrete residual.
    double continuity_residual = 0.0;
};

/// Picard (Oseen) iteration on the stabilized system; Reynolds number maps to
/// viscosity as nu = lid_speed * L / Re with unit lid and unit cavity side.
FESolution solve_fom_fe(const MeshPtr& mesh, double reynolds, const FESolverConfig& cfg);

/// One linear Stokes solve with the given lid speed; used as lifting field.
Field lifting_fe(const MeshPtr& mesh, double lid_speed, const StabilizationConfig& stab);

/// L2 norm of div(u_h) and of grad(u_h), element-wise exact for P1.
double divergence_l2(const Field& velocity);
double gradient_l2(const Field& velocity);

}  // namespace romforge::fe
