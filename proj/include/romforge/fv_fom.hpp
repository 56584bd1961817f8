#pragma once

#include <utility>
#include <vector>

#include "romforge/fv_ops.hpp"

namespace romforge::fv {

/// Inlet boundary data: magnitude (m/s) and angle (degrees).
struct InletBC {
    double mu1 = 0.0;
    double mu2 = 0.0;

    Eigen::Vector2d inlet_vector() const;
};

enum class LiftingMode { Stokes, Steady };

struct FVSolverConfig {
    double nu = 1e-3;
    double relax_u = 0.7;
    double relax_p = 0.3;
    double tol = 1e-6;
    int max_outer = 4000;
    double blend = 0.9;  // central fraction in the deferred-correction flux
    bool convection = true;
    bool closure = true;  // algebraic eddy viscosity on/off
    // nu div (grad u)^T in the momentum operator. Off gives the plain
    // Laplacian form that the eddy-free reduced system projects.
    bool transpose_diffusion = true;

    // Newton refinement towards the steady collocated operator form after
    // SIMPLE convergence (nu_t frozen); this is the state the reduced systems
    // are consistent with.
    bool polish = true;
    double polish_tol = 1e-11;
    int polish_max = 40;

    // divergence detection
    int stall_window = 600;
    double growth_factor = 100.0;

    LiftingMode lifting = LiftingMode::Stokes;
};

struct FVState {
    Field u;
    Field p;
    Field nu_t;
    std::vector<double> residual_u;  // per outer iteration, normalized
    std::vector<double> residual_p;
    int outer_iterations = 0;
    int polish_iterations = 0;
    double final_residual = 0.0;  // infinity norm of the steady residual
};

/// Prandtl mixing-length closure: nu_t = l^2 |S(u)| with
/// l = min(0.41 y_wall, 0.09 H). Wall distance is measured to the nearest
/// Wall face centre; H is the mesh bounding-box height. The velocity gradient
/// uses zero-gradient face extrapolation (pure function of cell values).
Field eddy_viscosity(const Field& u, const MeshPtr& mesh);

/// Coupled collocated Stokes solve (momentum-interpolation stabilized
/// continuity), exact superposition in the inlet data.
std::pair<Field, Field> solve_stokes_fv(const MeshPtr& mesh, const Eigen::Vector2d& inlet,
                                        double nu, bool molecular_transpose = true);

/// SIMPLE with collocated momentum interpolation, upwind plus
/// deferred-correction central convection, and the optional Newton polish.
FVState solve_fom_fv(const MeshPtr& mesh, const InletBC& bc, const FVSolverConfig& cfg);

/// Velocity lifting for a unit inlet condition, linear Stokes by default.
Field lifting_fv(const MeshPtr& mesh, const Eigen::Vector2d& unit_bc, const FVSolverConfig& cfg);

/// u - mu1 cos(mu2) L1 - mu1 sin(mu2) L2.
Field homogenize(const Field& u, const InletBC& bc, const std::vector<Field>& liftings);
Field dehomogenize(const Field& u_hom, const InletBC& bc, const std::vector<Field>& liftings);

/// Steady collocated residual with frozen nu_t:
///   momentum  = nu (lap u + div (grad u)^T) - div(u ox u)
///             + nu_t lap u + div(nu_t (grad u)^T) - grad p
///   continuity = div u
/// This is the operator form the FV reduced systems project.
struct SteadyResidual {
    Field momentum;    // arity 2
    Field continuity;  // arity 1
};
SteadyResidual steady_residual(const Field& u, const Field& p, const Field& nu_t, double nu,
                               const Eigen::Vector2d& inlet_velocity,
                               bool molecular_transpose = true);

/// Index (0-based, counted in cells downstream of the step) of the first
/// bottom-row cell with non-negative streamwise velocity after the step;
/// 0 when no recirculation is resolved.
int reattachment_index(const FVState& state, const MeshPtr& mesh);

}  // namespace romforge::fv
