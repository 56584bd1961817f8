#pragma once

#include <Eigen/Sparse>

#include "romforge/field.hpp"

namespace romforge {

enum class IpKind : unsigned { L2 = 0, H1Semi = 1, H1Full = 2 };

/// Symmetric weight matrix realizing an inner product on Fields of a fixed
/// mesh and arity. FE variants use exact P1 mass/stiffness matrices; FV
/// variants use cell volumes and a two-point flux stiffness with Dirichlet
/// behaviour baked in at Inlet/Wall boundaries.
class InnerProduct {
  public:
    static InnerProduct build(MeshPtr mesh, int arity, IpKind kind);

    double operator()(const Field& f, const Field& g) const;
    double norm(const Field& f) const;

    const Eigen::SparseMatrix<double>& weight() const { return w_; }
    IpKind kind() const { return kind_; }
    int arity() const { return arity_; }
    const MeshPtr& mesh() const { return mesh_; }

  private:
    MeshPtr mesh_;
    int arity_ = 1;
    IpKind kind_ = IpKind::L2;
    Eigen::SparseMatrix<double> w_;
};

double inner(const Field& f, const Field& g, const InnerProduct& ip);

/// L2 norm of the difference over the L2 norm of the reference field.
double relative_l2_error(const Field& f_rom, const Field& f_fom);

}  // namespace romforge
