#pragma once

#include <vector>

#include "romforge/fv_fom.hpp"
#include "romforge/newton.hpp"
#include "romforge/reduction.hpp"
#include "romforge/tensor.hpp"

namespace romforge::fv {

/// Galerkin projection of the steady collocated operators onto the reduced
/// family. The velocity family is ordered [lifting L1, lifting L2, velocity
/// modes..., supremizers...]; the two lifting coefficients are pinned to the
/// inlet data online and momentum equations are tested against the
/// non-lifting columns only.
///
/// Residual rows (i = 2..n_vel-1 free, q = 0..n_p-1), coefficients a with
/// a0 = mu1 cos(mu2), a1 = mu1 sin(mu2):
///   mom_i  = nu (b_diff [+ bt_diff])(i,:) a - a' c_conv(i) a
///          + sum_j g_j (ct1 + ct2)(i,j,:) a - h_grad(i,:) b
///   cont_q = p_div(q,:) a
/// The eddy blocks enter only when a coefficient vector g is supplied; g is
/// held fixed during Newton.
struct ReducedOperatorsFV {
    int n_vel = 0;   // liftings + modes + supremizers
    int n_p = 0;
    int n_visc = 0;  // eddy-viscosity modes; 0 when assembled without closure
    double nu = 0.0;

    Eigen::MatrixXd b_diff;   // (i, j): (phi_i, lap phi_j)
    Tensor3 c_conv;           // (i, j, k): (phi_i, div(phi_j ox phi_k)), j carries the flux
    Eigen::MatrixXd h_grad;   // (i, q): (phi_i, grad chi_q)
    Eigen::MatrixXd p_div;    // (q, j): (chi_q, div phi_j)
    Eigen::MatrixXd bt_diff;  // (i, j): (phi_i, div (grad phi_j)^T)
    Tensor3 ct1;              // (i, j, k): (phi_i, eta_j lap phi_k)
    Tensor3 ct2;              // (i, j, k): (phi_i, div(eta_j (grad phi_k)^T))

    int unknowns() const { return (n_vel - 2) + n_p; }

    /// Unknown vector x stacks [a_2..a_{n_vel-1}, b]; the pinned lifting pair
    /// is supplied separately. g must have n_visc entries.
    Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::Vector2d& gamma,
                             const Eigen::VectorXd& g, bool with_bt) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::Vector2d& gamma,
                             const Eigen::VectorXd& g, bool with_bt) const;

    /// Copy with the convection tensor zeroed (linear Stokes limit).
    ReducedOperatorsFV without_convection() const;
};

/// Assemble every reduced block by applying the discrete FOM operators to the
/// mode fields and volume-pairing the results. Boundary data rides on the two
/// leading lifting columns (unit (1,0) and (0,1) inlets); every other
/// velocity column and the supremizers are homogeneous, viscosity modes are
/// zero-gradient. viscosity_modes may be empty (plain-only operators).
ReducedOperatorsFV assemble_reduced(const std::vector<Field>& velocity_with_liftings,
                                    const std::vector<Field>& pressure_modes,
                                    const std::vector<Field>& supremizer_modes,
                                    const std::vector<Field>& viscosity_modes,
                                    const MeshPtr& mesh, double nu);

struct RomSolveResultFV {
    Eigen::VectorXd a;  // full velocity coefficients, lifting pair included
    Eigen::VectorXd b;
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Eddy-free reduced solve (diffusion through b_diff only).
RomSolveResultFV solve_rom_plain(const ReducedOperatorsFV& ops, const InletBC& mu,
                                 const NewtonConfig& cfg = {});

/// Reduced solve with the interpolated eddy-viscosity coefficients g held
/// fixed. with_bt folds the molecular transpose-diffusion block in; with
/// g = 0 and with_bt = false this is solve_rom_plain exactly.
RomSolveResultFV solve_rom_rbf(const ReducedOperatorsFV& ops, const InletBC& mu,
                               const Eigen::VectorXd& g, const NewtonConfig& cfg = {},
                               bool with_bt = true);

/// Velocity inner-product weight and divergence pairing for the FV
/// supremizer solve s = gram^-1 coupling chi (L2 gram; no constrained DOFs,
/// the homogeneous wall/inlet data lives in the divergence rules).
reduction::SupremizerProblem supremizer_problem_fv(const MeshPtr& mesh);

/// Linear combination of modes; coefficient length must match.
Field reconstruct_fv(const std::vector<Field>& modes, const Eigen::VectorXd& coef);

}  // namespace romforge::fv
