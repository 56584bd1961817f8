#pragma once

#include <vector>

#include "romforge/fe_fom.hpp"
#include "romforge/newton.hpp"
#include "romforge/reduction.hpp"
#include "romforge/tensor.hpp"

namespace romforge::fe {

/// The four reduced-model variants: stabilization kept or dropped online,
/// supremizer enrichment on or off. Enrichment is decided when the velocity
/// family is built; this struct records both choices for reporting.
struct RBOptions {
    bool online_stabilization = true;
    bool supremizer = true;

    std::string label() const {
        std::string s = online_stabilization ? "offline-online" : "offline-only";
        s += supremizer ? "+supremizer" : "-supremizer";
        return s;
    }
};

/// Reduced stabilized system, polynomial in the coefficients. The velocity
/// family is ordered [lifting, modes..., supremizers...]; the lifting column
/// has its coefficient pinned to the lid speed online, and momentum equations
/// are tested against the non-lifting columns only.
///
/// Residual rows (i = 1..n_vel-1 test modes, q = 0..n_p-1):
///   mom_i  = nu * diffusion(i,:) a + conv(i; a, a) + pressure_grad(i,:) b
///          + [stab] cubic(i; a,a,a) + stab_grad_p(i; a, b)
///   cont_q = divergence(q,:) a + [stab] stab_conv_q(a,a) + stab_pp(q,:) b
/// The stabilization blocks carry delta h^2 scaling; for P1 the Laplacian
/// residual term vanishes so nothing else depends on nu.
struct RBSystemFE {
    int n_vel = 0;  // lifting + velocity modes + supremizers
    int n_p = 0;
    bool online_stab = true;
    double delta = 1.0;

    Eigen::MatrixXd diffusion;      // n_vel x n_vel, unit-nu scaling
    Tensor3 convection;             // (i, j, k): (phi_j . grad phi_k, phi_i)
    Eigen::MatrixXd pressure_grad;  // n_vel x n_p: -(chi_q, div phi_i)
    Eigen::MatrixXd divergence;     // n_p x n_vel: (chi_q, div phi_j)
    Tensor4 stab_cubic;             // (i, j, k, l): d h^2 (phi_j.grad phi_k, phi_l.grad phi_i)
    Tensor3 stab_grad_p;            // (i, j, q): d h^2 (grad chi_q, phi_j.grad phi_i)
    Tensor3 stab_conv_q;            // (q, j, k): d h^2 (phi_j.grad phi_k, grad chi_q)
    Eigen::MatrixXd stab_pp;        // n_p x n_p: d h^2 (grad chi_b, grad chi_q)

    int unknowns() const { return (n_vel - 1) + n_p; }

    /// Unknown vector x stacks [a_1..a_{n_vel-1}, b_0..b_{n_p-1}]; the lifting
    /// coefficient a_0 is supplied separately.
    Eigen::VectorXd residual(const Eigen::VectorXd& x, double nu, double a0) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, double nu, double a0) const;

    /// Copy with every velocity-quadratic block zeroed (linear Stokes limit).
    RBSystemFE without_convection() const;
};

/// Galerkin projection of the stabilized FE forms onto the reduced family.
/// `velocity_family` = [liftings..., modes..., supremizers...] with
/// `n_lift` leading lifting columns; the non-lifting columns must be
/// ip_u-orthonormal and pressure modes ip_p-orthonormal (checked to 1e-8).
RBSystemFE project_fe(const std::vector<Field>& velocity_family,
                      const std::vector<Field>& pressure_modes, int n_lift,
                      const StabilizationConfig& stab, const RBOptions& options,
                      const InnerProduct& ip_u, const InnerProduct& ip_p);

struct RBSolveResult {
    Eigen::VectorXd a;  // full velocity coefficients, lifting entry included
    Eigen::VectorXd b;
    int iterations = 0;
    double residual_norm = 0.0;
};

using romforge::NewtonConfig;

RBSolveResult solve_rb_fe(const RBSystemFE& system, double nu, double lid_coefficient,
                          const NewtonConfig& cfg = {});

/// Linear combination of modes; coefficient length must match.
Field reconstruct(const std::vector<Field>& modes, const Eigen::VectorXd& coef);

/// Velocity inner-product weight (default H1-full) and b-form coupling for
/// the FE supremizer solve; all Dirichlet velocity DOFs are pinned to zero.
reduction::SupremizerProblem supremizer_problem_fe(const MeshPtr& mesh,
                                                   const StabilizationConfig& stab,
                                                   IpKind kind = IpKind::H1Full);

}  // namespace romforge::fe
