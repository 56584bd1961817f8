#include "romforge/fe_fom.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <unordered_map>

#include "fe_element.hpp"

namespace romforge::fe {

namespace {

using Trip = Eigen::Triplet<double>;

void require_fe(const Mesh& mesh) {
    if (mesh.kind() != MeshKind::FeTriangular)
        throw Error(ErrorCode::IncompatibleMesh, "FE solver needs an FE-triangular mesh");
}

}  // namespace

std::vector<std::pair<int, double>> dirichlet_values(const Mesh& mesh, double lid_speed) {
    // Inlet tags win at shared corner nodes: the lid drags the full top edge.
    std::unordered_map<int, BoundaryTag> tag;
    for (const auto& f : mesh.boundary_facets())
        for (int node : {f.a, f.b}) {
            auto it = tag.find(node);
            if (it == tag.end() || f.tag == BoundaryTag::Inlet) tag[node] = f.tag;
        }
    std::vector<std::pair<int, double>> out;
    out.reserve(tag.size() * 2);
    for (int node = 0; node < mesh.dof_count(); ++node) {
        auto it = tag.find(node);
        if (it == tag.end()) continue;
        const double ux = it->second == BoundaryTag::Inlet ? lid_speed : 0.0;
        out.emplace_back(2 * node, ux);
        out.emplace_back(2 * node + 1, 0.0);
    }
    return out;
}

FEOperatorSet assemble_fe(const MeshPtr& mesh, double nu, const StabilizationConfig& stab,
                          const Field& linearization_state, double lid_speed,
                          const BodyForce& body_force) {
    require_fe(*mesh);
    stab.validate();
    if (linearization_state.mesh().get() != mesh.get() || linearization_state.arity() != 2)
        throw Error(ErrorCode::IncompatibleFields, "linearization state must be a velocity field");

    const int nn = mesh->dof_count();
    const int nu_dofs = 2 * nn;
    FEOperatorSet ops;
    ops.nu = nu;
    ops.rhs_u = Eigen::VectorXd::Zero(nu_dofs);
    ops.rhs_p = Eigen::VectorXd::Zero(nn);
    ops.pressure_integral = Eigen::VectorXd::Zero(nn);

    std::vector<Trip> t_diff, t_conv, t_pg, t_div, t_suu, t_sup, t_spu, t_spp;
    const size_t ne = mesh->triangles().size();
    t_diff.reserve(ne * 18);
    t_conv.reserve(ne * 18);
    t_pg.reserve(ne * 18);
    t_div.reserve(ne * 18);
    t_suu.reserve(ne * 18);
    t_sup.reserve(ne * 18);
    t_spu.reserve(ne * 18);
    t_spp.reserve(ne * 9);

    for (size_t k = 0; k < ne; ++k) {
        const P1Element e = element_of(*mesh, k);
        const double scale = stab.delta * e.h2;
        const double third = e.area / 3.0;

        // sv(a, c): coefficient of basis c in the linear scalar w . grad(phi_a)
        Eigen::Matrix3d sv;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
                const Eigen::Vector2d wc(linearization_state.at(e.n[c], 0),
                                         linearization_state.at(e.n[c], 1));
                sv(a, c) = wc.dot(e.grad.row(a));
            }
        const Eigen::Matrix3d conv = sv * e.mass.transpose();       // (w.grad phi_b, phi_a) at (a,b)
        const Eigen::Matrix3d suu = sv * e.mass * sv.transpose();   // (w.grad phi_b, w.grad phi_a)
        const Eigen::Vector3d s_int = third * sv.rowwise().sum();   // integral of w.grad(phi_a)

        for (int a = 0; a < 3; ++a) {
            const int na = e.n[a];
            ops.pressure_integral[na] += third;
            for (int b = 0; b < 3; ++b) {
                const int nb = e.n[b];
                const double diff = e.area * e.grad.row(a).dot(e.grad.row(b));
                for (int i = 0; i < 2; ++i) {
                    t_diff.emplace_back(2 * na + i, 2 * nb + i, nu * diff);
                    t_conv.emplace_back(2 * na + i, 2 * nb + i, conv(b, a));
                    t_suu.emplace_back(2 * na + i, 2 * nb + i, scale * suu(a, b));
                    t_pg.emplace_back(2 * na + i, nb, -third * e.grad(a, i));
                    t_div.emplace_back(na, 2 * nb + i, third * e.grad(b, i));
                    t_sup.emplace_back(2 * na + i, nb, scale * e.grad(b, i) * s_int[a]);
                    t_spu.emplace_back(na, 2 * nb + i, scale * e.grad(a, i) * s_int[b]);
                }
                t_spp.emplace_back(na, nb, scale * e.area * e.grad.row(a).dot(e.grad.row(b)));
            }
        }

        if (body_force) {
            std::array<Eigen::Vector2d, 3> fm;
            for (int m = 0; m < 3; ++m) fm[m] = body_force(e.mid[m]);
            for (int a = 0; a < 3; ++a) {
                for (int m = 0; m < 3; ++m) {
                    const double sa_m = sv(a, 0) * kMidVal[m][0] + sv(a, 1) * kMidVal[m][1] +
                                        sv(a, 2) * kMidVal[m][2];
                    for (int i = 0; i < 2; ++i) {
                        ops.rhs_u[2 * e.n[a] + i] += third * kMidVal[m][a] * fm[m][i];
                        ops.rhs_u[2 * e.n[a] + i] += scale * third * sa_m * fm[m][i];
                    }
                    ops.rhs_p[e.n[a]] += scale * third * fm[m].dot(e.grad.row(a));
                }
            }
        }
    }

    auto build = [&](std::vector<Trip>& trips, int rows, int cols) {
        Eigen::SparseMatrix<double> m(rows, cols);
        m.setFromTriplets(trips.begin(), trips.end());
        return m;
    };
    ops.diffusion = build(t_diff, nu_dofs, nu_dofs);
    ops.convection = build(t_conv, nu_dofs, nu_dofs);
    ops.pressure_grad = build(t_pg, nu_dofs, nn);
    ops.divergence = build(t_div, nn, nu_dofs);
    ops.stab_uu = build(t_suu, nu_dofs, nu_dofs);
    ops.stab_up = build(t_sup, nu_dofs, nn);
    ops.stab_pu = build(t_spu, nn, nu_dofs);
    ops.stab_pp = build(t_spp, nn, nn);
    ops.dirichlet = dirichlet_values(*mesh, lid_speed);
    return ops;
}

namespace {

// Full constrained block system: velocity rows, pressure rows, gauge row.
void build_system(const FEOperatorSet& ops, Eigen::SparseMatrix<double>& A, Eigen::VectorXd& b) {
    const int nu_dofs = static_cast<int>(ops.diffusion.rows());
    const int np = static_cast<int>(ops.stab_pp.rows());
    const int total = nu_dofs + np + 1;

    std::vector<char> fixed(nu_dofs, 0);
    for (const auto& [dof, val] : ops.dirichlet) fixed[dof] = 1;

    std::vector<Trip> trips;
    trips.reserve(static_cast<size_t>(ops.diffusion.nonZeros()) * 3);
    auto add_block = [&](const Eigen::SparseMatrix<double>& m, int r0, int c0, bool vel_rows) {
        for (int o = 0; o < m.outerSize(); ++o)
            for (Eigen::SparseMatrix<double>::InnerIterator it(m, o); it; ++it) {
                if (vel_rows && fixed[it.row()]) continue;
                trips.emplace_back(r0 + static_cast<int>(it.row()),
                                   c0 + static_cast<int>(it.col()), it.value());
            }
    };
    add_block(ops.diffusion, 0, 0, true);
    add_block(ops.convection, 0, 0, true);
    add_block(ops.stab_uu, 0, 0, true);
    add_block(ops.pressure_grad, 0, nu_dofs, true);
    add_block(ops.stab_up, 0, nu_dofs, true);
    add_block(ops.divergence, nu_dofs, 0, false);
    add_block(ops.stab_pu, nu_dofs, 0, false);
    add_block(ops.stab_pp, nu_dofs, nu_dofs, false);

    b = Eigen::VectorXd::Zero(total);
    for (int a = 0; a < np; ++a) {
        trips.emplace_back(nu_dofs + a, nu_dofs + np, ops.pressure_integral[a]);
        trips.emplace_back(nu_dofs + np, nu_dofs + a, ops.pressure_integral[a]);
        b[nu_dofs + a] = ops.rhs_p[a];
    }
    for (int d = 0; d < nu_dofs; ++d)
        if (!fixed[d]) b[d] = ops.rhs_u[d];
    for (const auto& [dof, val] : ops.dirichlet) {
        trips.emplace_back(dof, dof, 1.0);
        b[dof] = val;
    }

    A.resize(total, total);
    A.setFromTriplets(trips.begin(), trips.end());
}

struct PicardState {
    Eigen::VectorXd x;
    int iterations = 0;
    double residual = 0.0;
    double continuity_residual = 0.0;
    bool converged = false;
};

PicardState picard(const MeshPtr& mesh, double nu, const FESolverConfig& cfg) {
    const int nn = mesh->dof_count();
    const int total = 3 * nn + 1;
    PicardState st;
    st.x = Eigen::VectorXd::Zero(total);
    Field w(mesh, 2);

    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    for (int it = 0; it <= cfg.picard_max; ++it) {
        const FEOperatorSet ops =
            assemble_fe(mesh, nu, cfg.stab, w, cfg.lid_speed, cfg.body_force);
        build_system(ops, A, b);
        const double bn = b.norm();
        const Eigen::VectorXd res = A * st.x - b;
        st.residual = res.norm() / (bn > 0.0 ? bn : 1.0);
        st.continuity_residual = res.segment(2 * nn, nn).norm();
        if (st.residual <= cfg.picard_tol) {
            st.converged = true;
            break;
        }
        if (it == cfg.picard_max) break;

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
        if (lu.info() != Eigen::Success)
            throw Error(ErrorCode::SolverFailure, "linear solve failed in Picard iteration");
        const Eigen::VectorXd xn = lu.solve(b);
        if (!xn.allFinite())
            throw Error(ErrorCode::SolverFailure, "non-finite Picard update");
        st.x = cfg.relax * xn + (1.0 - cfg.relax) * st.x;
        w.values() = st.x.head(2 * nn);
        st.iterations = it + 1;
    }
    return st;
}

}  // namespace

FESolution solve_fom_fe(const MeshPtr& mesh, double reynolds, const FESolverConfig& cfg) {
    require_fe(*mesh);
    if (!(reynolds > 0.0)) throw Error(ErrorCode::InvalidConfig, "Reynolds number must be positive");
    const double nu = 1.0 / reynolds;  // unit lid speed, unit cavity side

    const PicardState st = picard(mesh, nu, cfg);
    if (!st.converged)
        throw Error(ErrorCode::FomDiverged,
                    "Picard did not reach tolerance, final residual " +
                        std::to_string(st.residual));

    const int nn = mesh->dof_count();
    FESolution sol{Field(mesh, 2, st.x.head(2 * nn)), Field(mesh, 1, st.x.segment(2 * nn, nn)),
                   st.iterations, st.residual, st.continuity_residual};
    if (!sol.velocity.is_finite() || !sol.pressure.is_finite())
        throw Error(ErrorCode::FomDiverged, "non-finite FOM solution");
    return sol;
}

Field lifting_fe(const MeshPtr& mesh, double lid_speed, const StabilizationConfig& stab) {
    require_fe(*mesh);
    const int nn = mesh->dof_count();
    // With a zero convecting state the assembled system is the stabilized
    // Stokes operator (all convective blocks vanish); nu is fixed to 1.
    Field w(mesh, 2);
    const FEOperatorSet ops = assemble_fe(mesh, 1.0, stab, w, lid_speed, nullptr);
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    build_system(ops, A, b);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorCode::SolverFailure, "lifting Stokes solve failed");
    const Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite()) throw Error(ErrorCode::SolverFailure, "non-finite lifting field");
    return Field(mesh, 2, x.head(2 * nn));
}

double divergence_l2(const Field& velocity) {
    const Mesh& mesh = *velocity.mesh();
    double acc = 0.0;
    for (size_t k = 0; k < mesh.triangles().size(); ++k) {
        const P1Element e = element_of(mesh, k);
        double div = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < 2; ++i) div += velocity.at(e.n[a], i) * e.grad(a, i);
        acc += e.area * div * div;
    }
    return std::sqrt(acc);
}

double gradient_l2(const Field& velocity) {
    const Mesh& mesh = *velocity.mesh();
    double acc = 0.0;
    for (size_t k = 0; k < mesh.triangles().size(); ++k) {
        const P1Element e = element_of(mesh, k);
        Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) g(i, j) += velocity.at(e.n[a], i) * e.grad(a, j);
        acc += e.area * g.squaredNorm();
    }
    return std::sqrt(acc);
}

}  // namespace romforge::fe
