#include "romforge/fv_ops.hpp"

namespace romforge::fv {

namespace {

void require_fv(const Field& f) {
    if (f.mesh()->kind() != MeshKind::FvQuad)
        throw Error(ErrorCode::IncompatibleMesh, "operator requires an FV mesh field");
}

}  // namespace

const BoundaryRule& BoundaryRules::of(BoundaryTag tag) const {
    switch (tag) {
        case BoundaryTag::Inlet: return inlet;
        case BoundaryTag::Wall: return wall;
        default: return outlet;
    }
}

BoundaryRules BoundaryRules::homogenized() const {
    BoundaryRules h = *this;
    h.inlet.value.setZero();
    h.wall.value.setZero();
    h.outlet.value.setZero();
    return h;
}

BoundaryRules BoundaryRules::velocity(const Eigen::Vector2d& inlet_value) {
    BoundaryRules r;
    r.inlet = {FaceBc::Dirichlet, inlet_value};
    r.wall = {FaceBc::Dirichlet, Eigen::Vector2d::Zero()};
    r.outlet = {FaceBc::ZeroGradient, Eigen::Vector2d::Zero()};
    return r;
}

BoundaryRules BoundaryRules::pressure() {
    BoundaryRules r;
    r.inlet = {FaceBc::ZeroGradient, Eigen::Vector2d::Zero()};
    r.wall = {FaceBc::ZeroGradient, Eigen::Vector2d::Zero()};
    r.outlet = {FaceBc::Dirichlet, Eigen::Vector2d::Zero()};
    return r;
}

BoundaryRules BoundaryRules::viscosity() {
    BoundaryRules r;
    r.inlet = {FaceBc::ZeroGradient, Eigen::Vector2d::Zero()};
    r.wall = {FaceBc::ZeroGradient, Eigen::Vector2d::Zero()};
    r.outlet = {FaceBc::ZeroGradient, Eigen::Vector2d::Zero()};
    return r;
}

Eigen::VectorXd face_values(const Field& f, int comp, const BoundaryRules& rules) {
    require_fv(f);
    const auto& faces = f.mesh()->faces();
    Eigen::VectorXd v(static_cast<Eigen::Index>(faces.size()));
    for (size_t k = 0; k < faces.size(); ++k) {
        const FvFace& face = faces[k];
        if (!face.is_boundary()) {
            v[k] = face.w_owner * f.at(face.owner, comp) +
                   (1.0 - face.w_owner) * f.at(face.neighbour, comp);
        } else {
            const BoundaryRule& rule = rules.of(face.tag);
            v[k] = rule.kind == FaceBc::Dirichlet ? rule.value[comp] : f.at(face.owner, comp);
        }
    }
    return v;
}

namespace {

/// Accumulate face fluxes q (already area-weighted) into per-cell values with
/// the 1/V scaling; sign is outward from the owner.
void accumulate_flux(const Mesh& mesh, const Eigen::VectorXd& q, int comp, Field& out) {
    const auto& faces = mesh.faces();
    const auto& vol = mesh.cell_volumes();
    for (size_t k = 0; k < faces.size(); ++k) {
        const FvFace& face = faces[k];
        out.at(face.owner, comp) += q[k] / vol[face.owner];
        if (!face.is_boundary()) out.at(face.neighbour, comp) -= q[k] / vol[face.neighbour];
    }
}

}  // namespace

Field gradient(const Field& f, const BoundaryRules& rules) {
    require_fv(f);
    if (f.arity() != 1) throw Error(ErrorCode::IncompatibleFields, "gradient expects a scalar");
    const Mesh& mesh = *f.mesh();
    Field out(f.mesh(), 2);
    const Eigen::VectorXd fv = face_values(f, 0, rules);
    const auto& faces = mesh.faces();
    Eigen::VectorXd q(fv.size());
    for (int d = 0; d < 2; ++d) {
        for (size_t k = 0; k < faces.size(); ++k)
            q[k] = fv[k] * faces[k].area * faces[k].normal[d];
        accumulate_flux(mesh, q, d, out);
    }
    return out;
}

std::vector<Eigen::Matrix2d> vector_gradient(const Field& u, const BoundaryRules& rules) {
    require_fv(u);
    if (u.arity() != 2)
        throw Error(ErrorCode::IncompatibleFields, "vector_gradient expects a vector");
    const Mesh& mesh = *u.mesh();
    std::vector<Eigen::Matrix2d> g(mesh.cell_centers().size(), Eigen::Matrix2d::Zero());
    const auto& faces = mesh.faces();
    const auto& vol = mesh.cell_volumes();
    for (int r = 0; r < 2; ++r) {
        const Eigen::VectorXd fv = face_values(u, r, rules);
        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& face = faces[k];
            const Eigen::Vector2d flux = fv[k] * face.area * face.normal;
            g[face.owner].row(r) += flux.transpose() / vol[face.owner];
            if (!face.is_boundary()) g[face.neighbour].row(r) -= flux.transpose() / vol[face.neighbour];
        }
    }
    return g;
}

Field divergence(const Field& u, const BoundaryRules& rules) {
    require_fv(u);
    if (u.arity() != 2) throw Error(ErrorCode::IncompatibleFields, "divergence expects a vector");
    const Mesh& mesh = *u.mesh();
    const auto& faces = mesh.faces();
    Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(faces.size()));
    for (int d = 0; d < 2; ++d) {
        const Eigen::VectorXd fv = face_values(u, d, rules);
        for (size_t k = 0; k < faces.size(); ++k)
            q[k] += fv[k] * faces[k].area * faces[k].normal[d];
    }
    Field out(u.mesh(), 1);
    accumulate_flux(mesh, q, 0, out);
    return out;
}

Field laplacian(const Field& f, const BoundaryRules& rules) {
    require_fv(f);
    const Mesh& mesh = *f.mesh();
    const auto& faces = mesh.faces();
    Field out(f.mesh(), f.arity());
    Eigen::VectorXd q(static_cast<Eigen::Index>(faces.size()));
    for (int c = 0; c < f.arity(); ++c) {
        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& face = faces[k];
            double dudn = 0.0;
            if (!face.is_boundary()) {
                dudn = (f.at(face.neighbour, c) - f.at(face.owner, c)) / face.delta;
            } else {
                const BoundaryRule& rule = rules.of(face.tag);
                if (rule.kind == FaceBc::Dirichlet)
                    dudn = (rule.value[c] - f.at(face.owner, c)) / face.delta;
            }
            q[k] = dudn * face.area;
        }
        accumulate_flux(mesh, q, c, out);
    }
    return out;
}

Field div_outer(const Field& transported, const BoundaryRules& r_t, const Field& flux,
                const BoundaryRules& r_f) {
    require_fv(transported);
    Field::require_compatible(transported, flux);
    if (transported.arity() != 2 || flux.arity() != 2)
        throw Error(ErrorCode::IncompatibleFields, "div_outer expects vector fields");
    const Mesh& mesh = *transported.mesh();
    const auto& faces = mesh.faces();
    const Eigen::VectorXd fx = face_values(flux, 0, r_f);
    const Eigen::VectorXd fy = face_values(flux, 1, r_f);
    Eigen::VectorXd mass(fx.size());
    for (size_t k = 0; k < faces.size(); ++k)
        mass[k] = (fx[k] * faces[k].normal.x() + fy[k] * faces[k].normal.y()) * faces[k].area;

    Field out(transported.mesh(), 2);
    Eigen::VectorXd q(fx.size());
    for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd tv = face_values(transported, c, r_t);
        for (Eigen::Index k = 0; k < q.size(); ++k) q[k] = tv[k] * mass[k];
        accumulate_flux(mesh, q, c, out);
    }
    return out;
}

Field div_transpose_grad(const Field& u, const BoundaryRules& r_u, const Field* eta) {
    require_fv(u);
    if (u.arity() != 2)
        throw Error(ErrorCode::IncompatibleFields, "div_transpose_grad expects a vector");
    if (eta && (eta->mesh().get() != u.mesh().get() || eta->arity() != 1))
        throw Error(ErrorCode::IncompatibleFields, "div_transpose_grad expects a scalar eta");
    const Mesh& mesh = *u.mesh();
    const auto& faces = mesh.faces();
    const std::vector<Eigen::Matrix2d> g = vector_gradient(u, r_u);

    Eigen::VectorXd eta_f;
    if (eta) eta_f = face_values(*eta, 0, BoundaryRules::viscosity());

    Field out(u.mesh(), 2);
    Eigen::VectorXd q(static_cast<Eigen::Index>(faces.size()));
    for (int c = 0; c < 2; ++c) {
        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& face = faces[k];
            Eigen::Matrix2d gf = g[face.owner];
            if (!face.is_boundary())
                gf = face.w_owner * g[face.owner] + (1.0 - face.w_owner) * g[face.neighbour];
            // [(grad u)^T n]_c = sum_m d_c(u_m) n_m, with d_c(u_m) = g(m, c)
            double t = 0.0;
            for (int m = 0; m < 2; ++m) t += gf(m, c) * face.normal[m];
            q[k] = (eta ? eta_f[k] : 1.0) * t * face.area;
        }
        accumulate_flux(mesh, q, c, out);
    }
    return out;
}

// ---- LinearOps ---------------------------------------------------------------

LinearOps::LinearOps(MeshPtr mesh) : mesh_(std::move(mesh)) {
    if (mesh_->kind() != MeshKind::FvQuad)
        throw Error(ErrorCode::IncompatibleMesh, "LinearOps requires an FV mesh");
    const auto& faces = mesh_->faces();
    const auto& vol = mesh_->cell_volumes();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * faces.size());
    for (size_t k = 0; k < faces.size(); ++k) {
        const FvFace& f = faces[k];
        trip.emplace_back(f.owner, static_cast<int>(k), 1.0 / vol[f.owner]);
        if (!f.is_boundary())
            trip.emplace_back(f.neighbour, static_cast<int>(k), -1.0 / vol[f.neighbour]);
    }
    acc_.resize(static_cast<Eigen::Index>(vol.size()), static_cast<Eigen::Index>(faces.size()));
    acc_.setFromTriplets(trip.begin(), trip.end());
}

Eigen::SparseMatrix<double> LinearOps::interp(const BoundaryRules& rules) const {
    const auto& faces = mesh_->faces();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * faces.size());
    for (size_t k = 0; k < faces.size(); ++k) {
        const FvFace& f = faces[k];
        const int row = static_cast<int>(k);
        if (!f.is_boundary()) {
            trip.emplace_back(row, f.owner, f.w_owner);
            trip.emplace_back(row, f.neighbour, 1.0 - f.w_owner);
        } else if (rules.of(f.tag).kind == FaceBc::ZeroGradient) {
            trip.emplace_back(row, f.owner, 1.0);
        }
    }
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(faces.size()),
                                  static_cast<Eigen::Index>(mesh_->cell_volumes().size()));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Eigen::SparseMatrix<double> LinearOps::tpfa(const BoundaryRules& rules) const {
    const auto& faces = mesh_->faces();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * faces.size());
    for (size_t k = 0; k < faces.size(); ++k) {
        const FvFace& f = faces[k];
        const int row = static_cast<int>(k);
        if (!f.is_boundary()) {
            trip.emplace_back(row, f.owner, -1.0 / f.delta);
            trip.emplace_back(row, f.neighbour, 1.0 / f.delta);
        } else if (rules.of(f.tag).kind == FaceBc::Dirichlet) {
            trip.emplace_back(row, f.owner, -1.0 / f.delta);
        }
    }
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(faces.size()),
                                  static_cast<Eigen::Index>(mesh_->cell_volumes().size()));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Eigen::VectorXd LinearOps::area_normal(int comp) const {
    const auto& faces = mesh_->faces();
    Eigen::VectorXd v(static_cast<Eigen::Index>(faces.size()));
    for (size_t k = 0; k < faces.size(); ++k) v[k] = faces[k].area * faces[k].normal[comp];
    return v;
}

Eigen::VectorXd LinearOps::face_areas() const {
    const auto& faces = mesh_->faces();
    Eigen::VectorXd v(static_cast<Eigen::Index>(faces.size()));
    for (size_t k = 0; k < faces.size(); ++k) v[k] = faces[k].area;
    return v;
}

Eigen::SparseMatrix<double> LinearOps::grad_matrix(int deriv, const BoundaryRules& rules) const {
    return acc_ * (area_normal(deriv).asDiagonal() * interp(rules));
}

Eigen::SparseMatrix<double> LinearOps::laplacian_matrix(const BoundaryRules& rules) const {
    return acc_ * (face_areas().asDiagonal() * tpfa(rules));
}

}  // namespace romforge::fv
