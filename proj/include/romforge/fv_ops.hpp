#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "romforge/field.hpp"

namespace romforge::fv {

enum class FaceBc { Dirichlet, ZeroGradient };

struct BoundaryRule {
    FaceBc kind = FaceBc::ZeroGradient;
    Eigen::Vector2d value = Eigen::Vector2d::Zero();  // component 0 for scalars
};

/// Boundary treatment of a field when the discrete operators below are
/// applied to it. Every operator is linear in (cell values, Dirichlet data)
/// jointly, so linear combinations of fields superpose together with their
/// scaled rules.
struct BoundaryRules {
    BoundaryRule inlet;
    BoundaryRule wall;
    BoundaryRule outlet;

    const BoundaryRule& of(BoundaryTag tag) const;
    BoundaryRules homogenized() const;

    /// Velocity role: Dirichlet inlet value, no-slip walls, zero-gradient outlet.
    static BoundaryRules velocity(const Eigen::Vector2d& inlet_value);
    /// Homogenized velocity (modes, supremizers, perturbations).
    static BoundaryRules velocity_mode() { return velocity(Eigen::Vector2d::Zero()); }
    /// Pressure role: zero-gradient at inlet and walls, fixed 0 at the outlet.
    static BoundaryRules pressure();
    /// Eddy-viscosity role: zero-gradient everywhere.
    static BoundaryRules viscosity();
};

// ---- cell-field operators --------------------------------------------------
// Gauss-divergence evaluation with linear face interpolation; normal
// derivatives are two-point (owner to neighbour, or owner to face centre on
// boundaries). Face gradients for the transpose-diffusion term are linearly
// interpolated cell Gauss gradients, owner-sided on boundary faces.

/// Face values of component `comp` of f under its boundary rules.
Eigen::VectorXd face_values(const Field& f, int comp, const BoundaryRules& rules);

Field gradient(const Field& f, const BoundaryRules& rules);  // scalar -> vector
std::vector<Eigen::Matrix2d> vector_gradient(const Field& u, const BoundaryRules& rules);
Field divergence(const Field& u, const BoundaryRules& rules);  // vector -> scalar
Field laplacian(const Field& f, const BoundaryRules& rules);   // any arity

/// Divergence of the outer product: component i is
/// (1/V) sum_f transported_i,f (flux_f . n) A.
Field div_outer(const Field& transported, const BoundaryRules& r_t, const Field& flux,
                const BoundaryRules& r_f);

/// Divergence of eta (grad u)^T; eta == nullptr means eta identically 1.
Field div_transpose_grad(const Field& u, const BoundaryRules& r_u, const Field* eta);

// ---- sparse operator builders (homogenized rules) ---------------------------
// Building blocks for Jacobians and coupled linear solves. Layout is one DOF
// per cell (scalar); vector operators act componentwise through these.

class LinearOps {
  public:
    explicit LinearOps(MeshPtr mesh);

    const MeshPtr& mesh() const { return mesh_; }

    /// (cell <- face) signed flux accumulation including the 1/V scaling.
    const Eigen::SparseMatrix<double>& accumulate() const { return acc_; }
    /// (face <- cell) linear interpolation; Dirichlet faces give empty rows.
    Eigen::SparseMatrix<double> interp(const BoundaryRules& rules) const;
    /// (face <- cell) two-point normal derivative; zero-gradient faces empty.
    Eigen::SparseMatrix<double> tpfa(const BoundaryRules& rules) const;

    Eigen::VectorXd area_normal(int comp) const;  // per-face area * n_comp
    Eigen::VectorXd face_areas() const;

    /// Gauss gradient in one direction: accumulate * diag(A n_d) * interp.
    Eigen::SparseMatrix<double> grad_matrix(int deriv, const BoundaryRules& rules) const;
    /// Two-point Laplacian: accumulate * diag(A) * tpfa.
    Eigen::SparseMatrix<double> laplacian_matrix(const BoundaryRules& rules) const;

  private:
    MeshPtr mesh_;
    Eigen::SparseMatrix<double> acc_;
};

}  // namespace romforge::fv
