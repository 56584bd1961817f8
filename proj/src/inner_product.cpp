#include "romforge/inner_product.hpp"

#include <cmath>
#include <vector>

namespace romforge {

namespace {

using Trip = Eigen::Triplet<double>;

// Scatter a 3x3 scalar element matrix into all components of the DOF block.
void scatter_p1(std::vector<Trip>& trips, const std::array<int, 3>& t, int arity,
                const Eigen::Matrix3d& elem) {
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < arity; ++c)
                trips.emplace_back(t[a] * arity + c, t[b] * arity + c, elem(a, b));
}

Eigen::SparseMatrix<double> fe_weight(const Mesh& mesh, int arity, IpKind kind) {
    const auto& nodes = mesh.nodes();
    const auto& tris = mesh.triangles();
    const auto& areas = mesh.triangle_areas();
    std::vector<Trip> trips;
    trips.reserve(tris.size() * 9 * arity);

    for (size_t k = 0; k < tris.size(); ++k) {
        const auto& t = tris[k];
        const double area = areas[k];
        Eigen::Matrix3d elem = Eigen::Matrix3d::Zero();
        if (kind != IpKind::H1Semi) {
            Eigen::Matrix3d mass;
            mass << 2, 1, 1, 1, 2, 1, 1, 1, 2;
            elem += (area / 12.0) * mass;
        }
        if (kind != IpKind::L2) {
            // Constant P1 gradients from the (b,c) coefficients of the
            // barycentric basis on this triangle.
            Eigen::Matrix<double, 3, 2> g;
            const Eigen::Vector2d& p0 = nodes[t[0]];
            const Eigen::Vector2d& p1 = nodes[t[1]];
            const Eigen::Vector2d& p2 = nodes[t[2]];
            const double inv2a = 1.0 / (2.0 * area);
            g.row(0) = inv2a * Eigen::RowVector2d(p1.y() - p2.y(), p2.x() - p1.x());
            g.row(1) = inv2a * Eigen::RowVector2d(p2.y() - p0.y(), p0.x() - p2.x());
            g.row(2) = inv2a * Eigen::RowVector2d(p0.y() - p1.y(), p1.x() - p0.x());
            elem += area * (g * g.transpose());
        }
        scatter_p1(trips, t, arity, elem);
    }

    Eigen::SparseMatrix<double> w(mesh.dof_count() * arity, mesh.dof_count() * arity);
    w.setFromTriplets(trips.begin(), trips.end());
    return w;
}

Eigen::SparseMatrix<double> fv_weight(const Mesh& mesh, int arity, IpKind kind) {
    const int n = mesh.dof_count();
    std::vector<Trip> trips;
    if (kind != IpKind::H1Semi) {
        for (int c = 0; c < n; ++c)
            for (int comp = 0; comp < arity; ++comp)
                trips.emplace_back(c * arity + comp, c * arity + comp, mesh.cell_volumes()[c]);
    }
    if (kind != IpKind::L2) {
        for (const auto& f : mesh.faces()) {
            const double a = f.area / f.delta;
            if (!f.is_boundary()) {
                for (int comp = 0; comp < arity; ++comp) {
                    const int o = f.owner * arity + comp, nb = f.neighbour * arity + comp;
                    trips.emplace_back(o, o, a);
                    trips.emplace_back(nb, nb, a);
                    trips.emplace_back(o, nb, -a);
                    trips.emplace_back(nb, o, -a);
                }
            } else if (f.tag != BoundaryTag::Outlet) {
                for (int comp = 0; comp < arity; ++comp)
                    trips.emplace_back(f.owner * arity + comp, f.owner * arity + comp, a);
            }
        }
    }
    Eigen::SparseMatrix<double> w(n * arity, n * arity);
    w.setFromTriplets(trips.begin(), trips.end());
    return w;
}

}  // namespace

InnerProduct InnerProduct::build(MeshPtr mesh, int arity, IpKind kind) {
    InnerProduct ip;
    ip.mesh_ = std::move(mesh);
    ip.arity_ = arity;
    ip.kind_ = kind;
    ip.w_ = ip.mesh_->kind() == MeshKind::FeTriangular ? fe_weight(*ip.mesh_, arity, kind)
                                                       : fv_weight(*ip.mesh_, arity, kind);
    return ip;
}

double InnerProduct::operator()(const Field& f, const Field& g) const {
    Field::require_compatible(f, g);
    if (f.mesh().get() != mesh_.get() || f.arity() != arity_)
        throw Error(ErrorCode::IncompatibleFields, "inner product built for a different mesh");
    return f.values().dot(w_ * g.values());
}

double InnerProduct::norm(const Field& f) const {
    return std::sqrt(std::max(0.0, (*this)(f, f)));
}

double inner(const Field& f, const Field& g, const InnerProduct& ip) { return ip(f, g); }

double relative_l2_error(const Field& f_rom, const Field& f_fom) {
    Field::require_compatible(f_rom, f_fom);
    const InnerProduct l2 = InnerProduct::build(f_fom.mesh(), f_fom.arity(), IpKind::L2);
    const double denom = l2.norm(f_fom);
    if (denom == 0.0)
        throw Error(ErrorCode::UndefinedRelativeError, "reference field has zero norm");
    Field diff(f_fom.mesh(), f_fom.arity(), f_rom.values() - f_fom.values());
    return l2.norm(diff) / denom;
}

}  // namespace romforge
