#pragma once

#include <Eigen/Dense>

#include "romforge/mesh.hpp"

namespace romforge {

/// DOF vector attached to a mesh. Scalar fields store one value per DOF,
/// vector fields two interleaved components (x0, y0, x1, y1, ...).
class Field {
  public:
    Field() = default;
    Field(MeshPtr mesh, int arity)
        : mesh_(std::move(mesh)), arity_(arity),
          values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->dof_count()) * arity)) {
        if (arity != 1 && arity != 2)
            throw Error(ErrorCode::IncompatibleFields, "field arity must be 1 or 2");
    }
    Field(MeshPtr mesh, int arity, Eigen::VectorXd values)
        : mesh_(std::move(mesh)), arity_(arity), values_(std::move(values)) {
        if (arity != 1 && arity != 2)
            throw Error(ErrorCode::IncompatibleFields, "field arity must be 1 or 2");
        if (values_.size() != static_cast<Eigen::Index>(mesh_->dof_count()) * arity_)
            throw Error(ErrorCode::IncompatibleFields, "value count does not match mesh DOFs");
    }

    const MeshPtr& mesh() const { return mesh_; }
    int arity() const { return arity_; }
    Eigen::Index size() const { return values_.size(); }

    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }

    double& at(int dof, int comp = 0) { return values_[dof * arity_ + comp]; }
    double at(int dof, int comp = 0) const { return values_[dof * arity_ + comp]; }

    bool is_finite() const { return values_.allFinite(); }

    /// Same mesh object and arity; throws incompatible-fields otherwise.
    static void require_compatible(const Field& f, const Field& g) {
        if (f.mesh_.get() != g.mesh_.get() || f.arity_ != g.arity_)
            throw Error(ErrorCode::IncompatibleFields, "fields live on different meshes or arities");
    }

  private:
    MeshPtr mesh_;
    int arity_ = 1;
    Eigen::VectorXd values_;
};

}  // namespace romforge
