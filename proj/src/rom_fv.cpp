#include "romforge/rom_fv.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "romforge/inner_product.hpp"

namespace romforge::fv {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> slice(const Tensor3& t, int i) {
    return {t.v.data() + static_cast<Eigen::Index>(i) * t.d1 * t.d2, t.d1, t.d2};
}

/// L2 volume pairing; both fields must share mesh and arity.
double pair_volumes(const Field& f, const Field& g) {
    const auto& vol = f.mesh()->cell_volumes();
    double s = 0.0;
    for (int c = 0; c < static_cast<int>(vol.size()); ++c)
        for (int d = 0; d < f.arity(); ++d) s += vol[c] * f.at(c, d) * g.at(c, d);
    return s;
}

/// Boundary role of a velocity-family column: the two leading liftings carry
/// the unit inlet data, everything else is homogeneous.
BoundaryRules velocity_rules(int column) {
    if (column == 0) return BoundaryRules::velocity({1.0, 0.0});
    if (column == 1) return BoundaryRules::velocity({0.0, 1.0});
    return BoundaryRules::velocity_mode();
}

RomSolveResultFV newton_solve(const ReducedOperatorsFV& ops, const Eigen::Vector2d& gamma,
                              const Eigen::VectorXd& g, bool with_bt, const NewtonConfig& cfg) {
    if (ops.n_vel < 3 || ops.n_p < 1)
        throw Error(ErrorCode::InvalidBasis, "reduced solve needs free velocity and pressure columns");

    Eigen::VectorXd x = cfg.initial.size() == ops.unknowns()
                            ? cfg.initial
                            : Eigen::VectorXd::Zero(ops.unknowns());

    int it = 0;
    double rn = 0.0;
    while (true) {
        const Eigen::VectorXd F = ops.residual(x, gamma, g, with_bt);
        rn = F.lpNorm<Eigen::Infinity>();
        if (rn <= cfg.tol) break;
        if (it >= cfg.max_iter)
            throw Error(ErrorCode::NewtonDiverged,
                        "reduced Newton exceeded max iterations, residual " + std::to_string(rn));
        const Eigen::MatrixXd J = ops.jacobian(x, gamma, g, with_bt);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible())
            throw Error(ErrorCode::SingularJacobian, "reduced Jacobian is singular");
        x -= lu.solve(F);
        if (!x.allFinite())
            throw Error(ErrorCode::NewtonDiverged, "non-finite reduced Newton iterate");
        ++it;
    }

    RomSolveResultFV res;
    res.a.resize(ops.n_vel);
    res.a[0] = gamma.x();
    res.a[1] = gamma.y();
    res.a.tail(ops.n_vel - 2) = x.head(ops.n_vel - 2);
    res.b = x.tail(ops.n_p);
    res.iterations = it;
    res.residual_norm = rn;
    return res;
}

}  // namespace

Eigen::VectorXd ReducedOperatorsFV::residual(const Eigen::VectorXd& x,
                                             const Eigen::Vector2d& gamma,
                                             const Eigen::VectorXd& g, bool with_bt) const {
    if (x.size() != unknowns())
        throw Error(ErrorCode::InvalidConfig, "reduced unknown vector has the wrong length");
    if (g.size() != n_visc)
        throw Error(ErrorCode::InvalidConfig, "eddy coefficient vector has the wrong length");
    const int nf = n_vel - 2;

    Eigen::VectorXd a(n_vel);
    a[0] = gamma.x();
    a[1] = gamma.y();
    a.tail(nf) = x.head(nf);
    const Eigen::VectorXd b = x.tail(n_p);

    Eigen::VectorXd mom = nu * (b_diff * a);
    if (with_bt) mom += nu * (bt_diff * a);
    for (int i = 0; i < n_vel; ++i) {
        mom[i] -= a.dot(slice(c_conv, i) * a);
        if (n_visc > 0) mom[i] += g.dot((slice(ct1, i) + slice(ct2, i)) * a);
    }
    mom -= h_grad * b;

    Eigen::VectorXd r(unknowns());
    r.head(nf) = mom.segment(2, nf);
    r.tail(n_p) = p_div * a;
    return r;
}

Eigen::MatrixXd ReducedOperatorsFV::jacobian(const Eigen::VectorXd& x,
                                             const Eigen::Vector2d& gamma,
                                             const Eigen::VectorXd& g, bool with_bt) const {
    if (x.size() != unknowns())
        throw Error(ErrorCode::InvalidConfig, "reduced unknown vector has the wrong length");
    if (g.size() != n_visc)
        throw Error(ErrorCode::InvalidConfig, "eddy coefficient vector has the wrong length");
    const int nf = n_vel - 2;

    Eigen::VectorXd a(n_vel);
    a[0] = gamma.x();
    a[1] = gamma.y();
    a.tail(nf) = x.head(nf);

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(unknowns(), unknowns());
    for (int i = 2; i < n_vel; ++i) {
        Eigen::VectorXd row = nu * b_diff.row(i).transpose();
        if (with_bt) row += nu * bt_diff.row(i).transpose();
        const auto ci = slice(c_conv, i);
        row -= ci * a + ci.transpose() * a;
        if (n_visc > 0) row += (slice(ct1, i) + slice(ct2, i)).transpose() * g;
        jac.block(i - 2, 0, 1, nf) = row.tail(nf).transpose();
        jac.block(i - 2, nf, 1, n_p) = -h_grad.row(i);
    }
    for (int q = 0; q < n_p; ++q)
        jac.block(nf + q, 0, 1, nf) = p_div.row(q).tail(nf);
    return jac;
}

ReducedOperatorsFV ReducedOperatorsFV::without_convection() const {
    ReducedOperatorsFV s = *this;
    s.c_conv.v.setZero();
    return s;
}

ReducedOperatorsFV assemble_reduced(const std::vector<Field>& velocity_with_liftings,
                                    const std::vector<Field>& pressure_modes,
                                    const std::vector<Field>& supremizer_modes,
                                    const std::vector<Field>& viscosity_modes,
                                    const MeshPtr& mesh, double nu) {
    if (mesh->kind() != MeshKind::FvQuad)
        throw Error(ErrorCode::IncompatibleMesh, "reduced FV assembly requires an FV mesh");
    if (!(nu > 0.0)) throw Error(ErrorCode::InvalidConfig, "viscosity must be positive");
    if (velocity_with_liftings.size() < 2)
        throw Error(ErrorCode::InvalidBasis, "velocity family needs the two lifting columns");
    if (pressure_modes.empty())
        throw Error(ErrorCode::InvalidBasis, "at least one pressure mode is required");

    std::vector<Field> phi = velocity_with_liftings;
    phi.insert(phi.end(), supremizer_modes.begin(), supremizer_modes.end());

    auto check = [&](const Field& f, int arity) {
        if (f.mesh().get() != mesh.get() || f.arity() != arity)
            throw Error(ErrorCode::IncompatibleFields, "mode field mesh or arity mismatch");
    };
    for (const Field& f : phi) check(f, 2);
    for (const Field& f : pressure_modes) check(f, 1);
    for (const Field& f : viscosity_modes) check(f, 1);

    const int nv = static_cast<int>(phi.size());
    const int np = static_cast<int>(pressure_modes.size());
    const int ne = static_cast<int>(viscosity_modes.size());

    ReducedOperatorsFV ops;
    ops.n_vel = nv;
    ops.n_p = np;
    ops.n_visc = ne;
    ops.nu = nu;
    ops.b_diff.resize(nv, nv);
    ops.bt_diff.resize(nv, nv);
    ops.h_grad.resize(nv, np);
    ops.p_div.resize(np, nv);
    ops.c_conv = Tensor3(nv, nv, nv);
    ops.ct1 = Tensor3(nv, ne, nv);
    ops.ct2 = Tensor3(nv, ne, nv);

    // per-column linear operator evaluations
    std::vector<Field> lap_j, trans_j, div_j;
    lap_j.reserve(nv);
    trans_j.reserve(nv);
    div_j.reserve(nv);
    for (int j = 0; j < nv; ++j) {
        const BoundaryRules rj = velocity_rules(j);
        lap_j.push_back(laplacian(phi[j], rj));
        trans_j.push_back(div_transpose_grad(phi[j], rj, nullptr));
        div_j.push_back(divergence(phi[j], rj));
    }

    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nv; ++j) {
            ops.b_diff(i, j) = pair_volumes(phi[i], lap_j[j]);
            ops.bt_diff(i, j) = pair_volumes(phi[i], trans_j[j]);
        }

    const BoundaryRules press = BoundaryRules::pressure();
    for (int q = 0; q < np; ++q) {
        const Field gq = gradient(pressure_modes[q], press);
        for (int i = 0; i < nv; ++i) ops.h_grad(i, q) = pair_volumes(phi[i], gq);
        for (int j = 0; j < nv; ++j) ops.p_div(q, j) = pair_volumes(pressure_modes[q], div_j[j]);
    }

    for (int j = 0; j < nv; ++j) {
        const BoundaryRules rj = velocity_rules(j);
        for (int k = 0; k < nv; ++k) {
            const Field f = div_outer(phi[k], velocity_rules(k), phi[j], rj);
            for (int i = 0; i < nv; ++i) ops.c_conv(i, j, k) = pair_volumes(phi[i], f);
        }
    }

    const int n_cells = static_cast<int>(mesh->cell_volumes().size());
    for (int j = 0; j < ne; ++j) {
        const Field& eta = viscosity_modes[j];
        for (int k = 0; k < nv; ++k) {
            Field scaled(mesh, 2);
            for (int c = 0; c < n_cells; ++c)
                for (int d = 0; d < 2; ++d) scaled.at(c, d) = eta.at(c, 0) * lap_j[k].at(c, d);
            const Field t = div_transpose_grad(phi[k], velocity_rules(k), &eta);
            for (int i = 0; i < nv; ++i) {
                ops.ct1(i, j, k) = pair_volumes(phi[i], scaled);
                ops.ct2(i, j, k) = pair_volumes(phi[i], t);
            }
        }
    }

    if (!ops.b_diff.allFinite() || !ops.bt_diff.allFinite() || !ops.h_grad.allFinite() ||
        !ops.p_div.allFinite() || !ops.c_conv.v.allFinite() || !ops.ct1.v.allFinite() ||
        !ops.ct2.v.allFinite())
        throw Error(ErrorCode::InvalidBasis, "non-finite reduced operator entry");
    return ops;
}

RomSolveResultFV solve_rom_plain(const ReducedOperatorsFV& ops, const InletBC& mu,
                                 const NewtonConfig& cfg) {
    return newton_solve(ops, mu.inlet_vector(), Eigen::VectorXd::Zero(ops.n_visc), false, cfg);
}

RomSolveResultFV solve_rom_rbf(const ReducedOperatorsFV& ops, const InletBC& mu,
                               const Eigen::VectorXd& g, const NewtonConfig& cfg, bool with_bt) {
    if (g.size() != ops.n_visc)
        throw Error(ErrorCode::InvalidConfig, "eddy coefficient vector has the wrong length");
    return newton_solve(ops, mu.inlet_vector(), g, with_bt, cfg);
}

reduction::SupremizerProblem supremizer_problem_fv(const MeshPtr& mesh) {
    if (mesh->kind() != MeshKind::FvQuad)
        throw Error(ErrorCode::IncompatibleMesh, "FV supremizer requires an FV mesh");
    reduction::SupremizerProblem prob;
    prob.mesh = mesh;
    prob.gram = InnerProduct::build(mesh, 2, IpKind::L2).weight();

    const LinearOps ops(mesh);
    const BoundaryRules hom = BoundaryRules::velocity_mode();
    const int n = mesh->dof_count();
    const auto& vol = mesh->cell_volumes();
    std::vector<Eigen::Triplet<double>> trips;
    for (int d = 0; d < 2; ++d) {
        const Eigen::SparseMatrix<double> gd = ops.grad_matrix(d, hom);
        for (int o = 0; o < gd.outerSize(); ++o)
            for (Eigen::SparseMatrix<double>::InnerIterator it(gd, o); it; ++it)
                // (chi, div v) pairing row for velocity DOF (cell it.col(), comp d)
                trips.emplace_back(static_cast<int>(it.col()) * 2 + d,
                                   static_cast<int>(it.row()),
                                   it.value() * vol[static_cast<size_t>(it.row())]);
    }
    prob.coupling.resize(2 * n, n);
    prob.coupling.setFromTriplets(trips.begin(), trips.end());
    return prob;
}

Field reconstruct_fv(const std::vector<Field>& modes, const Eigen::VectorXd& coef) {
    if (modes.empty()) throw Error(ErrorCode::InvalidBasis, "no modes to reconstruct from");
    if (coef.size() != static_cast<Eigen::Index>(modes.size()))
        throw Error(ErrorCode::InvalidConfig, "coefficient count does not match mode count");
    Field out(modes.front().mesh(), modes.front().arity());
    for (size_t i = 0; i < modes.size(); ++i) out.values() += coef[i] * modes[i].values();
    return out;
}

}  // namespace romforge::fv
