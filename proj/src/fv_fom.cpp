#include "romforge/fv_fom.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace romforge::fv {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct WallGeometry {
    std::vector<double> y_wall;  // distance to nearest wall face centre
    double height = 0.0;         // bounding-box height
};

WallGeometry wall_geometry(const Mesh& mesh) {
    WallGeometry wg;
    const auto& centers = mesh.cell_centers();
    wg.y_wall.assign(centers.size(), std::numeric_limits<double>::max());
    double ymin = std::numeric_limits<double>::max();
    double ymax = std::numeric_limits<double>::lowest();
    for (const FvFace& f : mesh.faces()) {
        if (f.is_boundary()) {
            ymin = std::min(ymin, f.center.y());
            ymax = std::max(ymax, f.center.y());
        }
        if (!f.is_boundary() || f.tag != BoundaryTag::Wall) continue;
        for (size_t c = 0; c < centers.size(); ++c)
            wg.y_wall[c] = std::min(wg.y_wall[c], (centers[c] - f.center).norm());
    }
    wg.height = ymax - ymin;
    return wg;
}

void add_block(std::vector<Eigen::Triplet<double>>& trip, const Eigen::SparseMatrix<double>& b,
               int row0, int col0, double scale = 1.0) {
    for (int k = 0; k < b.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(b, k); it; ++it)
            trip.emplace_back(row0 + static_cast<int>(it.row()),
                              col0 + static_cast<int>(it.col()), scale * it.value());
}

Eigen::VectorXd face_interp_cells(const Mesh& mesh, const Eigen::VectorXd& cell_values) {
    const auto& faces = mesh.faces();
    Eigen::VectorXd v(static_cast<Eigen::Index>(faces.size()));
    for (size_t k = 0; k < faces.size(); ++k) {
        const FvFace& f = faces[k];
        v[k] = f.is_boundary() ? cell_values[f.owner]
                               : f.w_owner * cell_values[f.owner] +
                                     (1.0 - f.w_owner) * cell_values[f.neighbour];
    }
    return v;
}

struct BcRuleSet {
    BoundaryRules vel;
    BoundaryRules vel_hom;
    BoundaryRules press;
    BoundaryRules zg;  // zero-gradient everywhere (interpolating cell gradients)

    explicit BcRuleSet(const Eigen::Vector2d& inlet)
        : vel(BoundaryRules::velocity(inlet)),
          vel_hom(BoundaryRules::velocity_mode()),
          press(BoundaryRules::pressure()),
          zg(BoundaryRules::viscosity()) {}
};

/// Jacobian of the steady collocated residual at (u, p) with frozen nu_t,
/// layout [u_x | u_y | p].
Eigen::SparseMatrix<double> steady_jacobian(const LinearOps& ops, const Field& u,
                                            const Field& nu_t, double nu, const BcRuleSet& rules,
                                            bool with_convection, bool molecular_transpose) {
    const Mesh& mesh = *ops.mesh();
    const int n = static_cast<int>(mesh.cell_volumes().size());
    const Eigen::SparseMatrix<double> lap = ops.laplacian_matrix(rules.vel_hom);
    const Eigen::SparseMatrix<double> interp_hom = ops.interp(rules.vel_hom);
    const Eigen::SparseMatrix<double> interp_zg = ops.interp(rules.zg);

    Eigen::VectorXd nu_cells(n);
    for (int c = 0; c < n; ++c) nu_cells[c] = nu + nu_t.at(c, 0);
    const Eigen::VectorXd eta_f = face_values(nu_t, 0, rules.zg);

    std::vector<Eigen::Triplet<double>> trip;

    // convection linearization pieces
    Eigen::VectorXd mass;
    std::array<Eigen::VectorXd, 2> ut;
    if (with_convection) {
        const Eigen::VectorXd ufx = face_values(u, 0, rules.vel);
        const Eigen::VectorXd ufy = face_values(u, 1, rules.vel);
        mass.resize(ufx.size());
        const auto& faces = mesh.faces();
        for (size_t k = 0; k < faces.size(); ++k)
            mass[k] = (ufx[k] * faces[k].normal.x() + ufy[k] * faces[k].normal.y()) *
                      faces[k].area;
        ut[0] = ufx;
        ut[1] = ufy;
    }

    for (int i = 0; i < 2; ++i) {
        for (int m = 0; m < 2; ++m) {
            // transpose diffusion: acc diag((nu + eta_f) A n_m) interp_zg grad_i
            const double nu_trans = molecular_transpose ? nu : 0.0;
            Eigen::VectorXd w = ops.area_normal(m);
            for (Eigen::Index k = 0; k < w.size(); ++k) w[k] *= nu_trans + eta_f[k];
            Eigen::SparseMatrix<double> block =
                ops.accumulate() * (w.asDiagonal() * (interp_zg * ops.grad_matrix(i, rules.vel_hom)));
            if (i == m) block += Eigen::SparseMatrix<double>(nu_cells.asDiagonal()) * lap;
            if (with_convection) {
                Eigen::VectorXd wa = ops.area_normal(m);
                for (Eigen::Index k = 0; k < wa.size(); ++k) wa[k] *= ut[i][k];
                block -= ops.accumulate() * (wa.asDiagonal() * interp_hom);
                if (i == m)
                    block -= ops.accumulate() * (mass.asDiagonal() * interp_hom);
            }
            add_block(trip, block, i * n, m * n);
        }
        add_block(trip, ops.grad_matrix(i, rules.press), i * n, 2 * n, -1.0);
        add_block(trip, ops.grad_matrix(i, rules.vel_hom), 2 * n, i * n);
    }

    Eigen::SparseMatrix<double> jac(3 * n, 3 * n);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
}

void check_finite(const Field& f, const char* what) {
    if (!f.values().allFinite())
        throw Error(ErrorCode::FomDiverged, std::string(what) + " contains NaN/Inf");
}

}  // namespace

Eigen::Vector2d InletBC::inlet_vector() const {
    const double rad = mu2 * kPi / 180.0;
    return {mu1 * std::cos(rad), mu1 * std::sin(rad)};
}

Field eddy_viscosity(const Field& u, const MeshPtr& mesh) {
    if (u.mesh().get() != mesh.get())
        throw Error(ErrorCode::IncompatibleMesh, "eddy_viscosity: field/mesh mismatch");
    const WallGeometry wg = wall_geometry(*mesh);
    const auto g = vector_gradient(u, BoundaryRules::viscosity());
    Field nu_t(mesh, 1);
    for (size_t c = 0; c < g.size(); ++c) {
        const Eigen::Matrix2d s = 0.5 * (g[c] + g[c].transpose());
        const double smag = std::sqrt(2.0 * (s.array() * s.array()).sum());
        const double l = std::min(0.41 * wg.y_wall[c], 0.09 * wg.height);
        nu_t.at(static_cast<int>(c), 0) = l * l * smag;
    }
    return nu_t;
}

SteadyResidual steady_residual(const Field& u, const Field& p, const Field& nu_t, double nu,
                               const Eigen::Vector2d& inlet_velocity, bool molecular_transpose) {
    if (u.mesh().get() != p.mesh().get() || u.mesh().get() != nu_t.mesh().get())
        throw Error(ErrorCode::IncompatibleFields, "steady_residual: mesh mismatch");
    const BcRuleSet rules(inlet_velocity);
    const Field lap = laplacian(u, rules.vel);

    SteadyResidual out{Field(u.mesh(), 2), Field(u.mesh(), 1)};
    Field conv = div_outer(u, rules.vel, u, rules.vel);
    Field trans_mol = div_transpose_grad(u, rules.vel, nullptr);
    Field trans_eddy = div_transpose_grad(u, rules.vel, &nu_t);
    Field gp = gradient(p, rules.press);
    const double nu_trans = molecular_transpose ? nu : 0.0;

    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(u.mesh()->cell_volumes().size()); ++c)
        for (int d = 0; d < 2; ++d)
            out.momentum.at(c, d) = nu * lap.at(c, d) + nu_trans * trans_mol.at(c, d) -
                                    conv.at(c, d) + nu_t.at(c, 0) * lap.at(c, d) +
                                    trans_eddy.at(c, d) - gp.at(c, d);
    out.continuity = divergence(u, rules.vel);
    return out;
}

std::pair<Field, Field> solve_stokes_fv(const MeshPtr& mesh, const Eigen::Vector2d& inlet,
                                        double nu, bool molecular_transpose) {
    if (mesh->kind() != MeshKind::FvQuad)
        throw Error(ErrorCode::IncompatibleMesh, "solve_stokes_fv requires an FV mesh");
    if (!(nu > 0.0)) throw Error(ErrorCode::InvalidConfig, "viscosity must be positive");
    const LinearOps ops(mesh);
    const BcRuleSet rules(inlet);
    const int n = static_cast<int>(mesh->cell_volumes().size());

    // momentum-interpolation coefficient d = V / a_P, a_P from the implicit
    // diffusion diagonal
    const Eigen::SparseMatrix<double> lap = ops.laplacian_matrix(rules.vel_hom);
    Eigen::VectorXd d_cells(n);
    const auto& vol = mesh->cell_volumes();
    for (int c = 0; c < n; ++c) d_cells[c] = vol[c] / (-nu * lap.coeff(c, c) * vol[c]);
    const Eigen::VectorXd d_f = face_interp_cells(*mesh, d_cells);

    std::vector<Eigen::Triplet<double>> trip;
    const Eigen::SparseMatrix<double> interp_zg = ops.interp(rules.zg);
    for (int i = 0; i < 2; ++i) {
        for (int m = 0; m < 2; ++m) {
            const double nu_trans = molecular_transpose ? nu : 0.0;
            Eigen::SparseMatrix<double> block =
                nu_trans * (ops.accumulate() *
                            (ops.area_normal(m).asDiagonal() *
                             (interp_zg * ops.grad_matrix(i, rules.vel_hom))));
            if (i == m) block += nu * lap;
            add_block(trip, block, i * n, m * n);
        }
        add_block(trip, ops.grad_matrix(i, rules.press), i * n, 2 * n, -1.0);
        add_block(trip, ops.grad_matrix(i, rules.vel_hom), 2 * n, i * n);
    }
    // stabilized continuity pressure block: -acc diag(d A)(tpfa - interp grad)
    {
        Eigen::VectorXd w = ops.face_areas();
        for (Eigen::Index k = 0; k < w.size(); ++k) w[k] *= d_f[k];
        Eigen::SparseMatrix<double> cp = ops.accumulate() * (w.asDiagonal() * ops.tpfa(rules.press));
        for (int d = 0; d < 2; ++d) {
            Eigen::VectorXd wd = ops.area_normal(d);
            for (Eigen::Index k = 0; k < wd.size(); ++k) wd[k] *= d_f[k];
            cp -= ops.accumulate() * (wd.asDiagonal() * (interp_zg * ops.grad_matrix(d, rules.press)));
        }
        add_block(trip, cp, 2 * n, 2 * n, -1.0);
    }
    Eigen::SparseMatrix<double> jac(3 * n, 3 * n);
    jac.setFromTriplets(trip.begin(), trip.end());

    // affine part: residual of the zero state carries the inlet data
    Field zero_u(mesh, 2), zero_p(mesh, 1);
    const Field lap0 = laplacian(zero_u, rules.vel);
    const Field trans0 = div_transpose_grad(zero_u, rules.vel, nullptr);
    const Field div0 = divergence(zero_u, rules.vel);
    Eigen::VectorXd rhs(3 * n);
    const double nu_trans0 = molecular_transpose ? nu : 0.0;
    for (int c = 0; c < n; ++c) {
        rhs[c] = -nu * lap0.at(c, 0) - nu_trans0 * trans0.at(c, 0);
        rhs[n + c] = -nu * lap0.at(c, 1) - nu_trans0 * trans0.at(c, 1);
        rhs[2 * n + c] = -div0.at(c, 0);
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(jac);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorCode::SolverFailure, "coupled Stokes factorization failed");
    const Eigen::VectorXd x = lu.solve(rhs);

    Field u(mesh, 2), p(mesh, 1);
    for (int c = 0; c < n; ++c) {
        u.at(c, 0) = x[c];
        u.at(c, 1) = x[n + c];
        p.at(c, 0) = x[2 * n + c];
    }
    return {std::move(u), std::move(p)};
}

FVState solve_fom_fv(const MeshPtr& mesh, const InletBC& bc, const FVSolverConfig& cfg) {
    if (mesh->kind() != MeshKind::FvQuad)
        throw Error(ErrorCode::IncompatibleMesh, "solve_fom_fv requires an FV mesh");
    if (!std::isfinite(bc.mu1) || !std::isfinite(bc.mu2) || bc.mu1 < 0.0)
        throw Error(ErrorCode::InvalidConfig, "invalid inlet condition");
    if (!(cfg.nu > 0.0)) throw Error(ErrorCode::InvalidConfig, "viscosity must be positive");

    const Eigen::Vector2d uin = bc.inlet_vector();
    const int n = static_cast<int>(mesh->cell_volumes().size());
    const auto& faces = mesh->faces();
    const auto& vol = mesh->cell_volumes();
    const BcRuleSet rules(uin);

    FVState st{Field(mesh, 2), Field(mesh, 1), Field(mesh, 1), {}, {}, 0, 0, 0.0};

    if (!cfg.convection && !cfg.closure) {
        auto [u, p] = solve_stokes_fv(mesh, uin, cfg.nu, cfg.transpose_diffusion);
        st.u = std::move(u);
        st.p = std::move(p);
        st.outer_iterations = 1;
        return st;
    }

    // face mass fluxes, kept consistent through the pressure corrections
    Eigen::VectorXd flux = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(faces.size()));
    double inlet_flux_scale = 0.0;
    for (size_t k = 0; k < faces.size(); ++k)
        if (faces[k].is_boundary() && faces[k].tag == BoundaryTag::Inlet) {
            flux[k] = uin.dot(faces[k].normal) * faces[k].area;
            inlet_flux_scale += std::abs(flux[k]);
        }
    const double mass_scale = std::max(inlet_flux_scale, 1e-300);
    const double mom_scale = std::max(inlet_flux_scale * uin.norm(), 1e-300);

    double best = std::numeric_limits<double>::max();
    int best_iter = 0;
    bool converged = false;

    Eigen::VectorXd d_cells = Eigen::VectorXd::Zero(n);

    for (int outer = 1; outer <= cfg.max_outer; ++outer) {
        st.outer_iterations = outer;
        if (cfg.closure) st.nu_t = eddy_viscosity(st.u, mesh);
        check_finite(st.u, "velocity");
        check_finite(st.p, "pressure");

        // ---- momentum assembly (shared matrix, per-component rhs) ----------
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);

        auto add = [&](int r, int c, double v) {
            if (r == c)
                diag[r] += v;
            else
                trip.emplace_back(r, c, v);
        };

        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& f = faces[k];
            const double fa = f.area;
            if (!f.is_boundary()) {
                const double nu_own = cfg.nu + (cfg.closure ? st.nu_t.at(f.owner, 0) : 0.0);
                const double nu_nb = cfg.nu + (cfg.closure ? st.nu_t.at(f.neighbour, 0) : 0.0);
                const double g_own = nu_own * fa / f.delta;
                const double g_nb = nu_nb * fa / f.delta;
                add(f.owner, f.owner, g_own);
                add(f.owner, f.neighbour, -g_own);
                add(f.neighbour, f.neighbour, g_nb);
                add(f.neighbour, f.owner, -g_nb);
                if (cfg.convection) {
                    const double fm = flux[k];
                    add(f.owner, f.owner, std::max(fm, 0.0));
                    add(f.owner, f.neighbour, std::min(fm, 0.0));
                    add(f.neighbour, f.neighbour, std::max(-fm, 0.0));
                    add(f.neighbour, f.owner, std::min(-fm, 0.0));
                    // deferred correction toward the central face value
                    for (int c = 0; c < 2; ++c) {
                        const double central = f.w_owner * st.u.at(f.owner, c) +
                                               (1.0 - f.w_owner) * st.u.at(f.neighbour, c);
                        const double up =
                            fm >= 0.0 ? st.u.at(f.owner, c) : st.u.at(f.neighbour, c);
                        const double corr = cfg.blend * fm * (central - up);
                        rhs(f.owner, c) -= corr;
                        rhs(f.neighbour, c) += corr;
                    }
                }
            } else {
                const double nu_own = cfg.nu + (cfg.closure ? st.nu_t.at(f.owner, 0) : 0.0);
                const BoundaryRule& rule = rules.vel.of(f.tag);
                if (rule.kind == FaceBc::Dirichlet) {
                    const double g = nu_own * fa / f.delta;
                    add(f.owner, f.owner, g);
                    for (int c = 0; c < 2; ++c) rhs(f.owner, c) += g * rule.value[c];
                    if (cfg.convection) {
                        const double fm = flux[k];
                        add(f.owner, f.owner, std::max(fm, 0.0));
                        for (int c = 0; c < 2; ++c)
                            rhs(f.owner, c) -= std::min(fm, 0.0) * rule.value[c];
                    }
                } else if (cfg.convection) {  // outlet, zero-gradient
                    const double fm = flux[k];
                    if (fm >= 0.0)
                        add(f.owner, f.owner, fm);
                    else
                        for (int c = 0; c < 2; ++c) rhs(f.owner, c) -= fm * st.u.at(f.owner, c);
                }
            }
        }

        // explicit sources: pressure gradient and transpose diffusion
        {
            const Field gp = gradient(st.p, rules.press);
            const double nu_trans = cfg.transpose_diffusion ? cfg.nu : 0.0;
            const Field trans_mol = div_transpose_grad(st.u, rules.vel, nullptr);
            Field trans_eddy(mesh, 2);
            if (cfg.closure) trans_eddy = div_transpose_grad(st.u, rules.vel, &st.nu_t);
            for (int c = 0; c < n; ++c)
                for (int dcomp = 0; dcomp < 2; ++dcomp)
                    rhs(c, dcomp) += vol[c] * (nu_trans * trans_mol.at(c, dcomp) +
                                               trans_eddy.at(c, dcomp) - gp.at(c, dcomp));
        }

        // residual of the previous iterate, then under-relaxation
        Eigen::SparseMatrix<double> a_off(n, n);
        a_off.setFromTriplets(trip.begin(), trip.end());
        double res_u = 0.0;
        {
            Eigen::MatrixXd uc(n, 2);
            for (int c = 0; c < n; ++c)
                for (int dcomp = 0; dcomp < 2; ++dcomp) uc(c, dcomp) = st.u.at(c, dcomp);
            const Eigen::MatrixXd r = a_off * uc + diag.asDiagonal() * uc - rhs;
            res_u = r.cwiseAbs().sum() / mom_scale;
        }

        for (int c = 0; c < n; ++c) {
            const double ap = diag[c] / cfg.relax_u;
            for (int dcomp = 0; dcomp < 2; ++dcomp)
                rhs(c, dcomp) += (1.0 - cfg.relax_u) * ap * st.u.at(c, dcomp);
            diag[c] = ap;
            d_cells[c] = vol[c] / ap;
            trip.emplace_back(c, c, ap);
        }
        Eigen::SparseMatrix<double> a_mat(n, n);
        a_mat.setFromTriplets(trip.begin(), trip.end());

        Eigen::SparseLU<Eigen::SparseMatrix<double>> mom_lu(a_mat);
        if (mom_lu.info() != Eigen::Success)
            throw Error(ErrorCode::FomDiverged, "momentum factorization failed");
        Eigen::MatrixXd ustar(n, 2);
        ustar.col(0) = mom_lu.solve(rhs.col(0));
        ustar.col(1) = mom_lu.solve(rhs.col(1));
        if (!ustar.allFinite()) throw Error(ErrorCode::FomDiverged, "momentum solve diverged");

        // ---- momentum-interpolated face fluxes ------------------------------
        const Field gp_cells = gradient(st.p, rules.press);
        const Eigen::VectorXd d_f = face_interp_cells(*mesh, d_cells);
        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& f = faces[k];
            if (!f.is_boundary()) {
                double un = 0.0, gn = 0.0;
                for (int dcomp = 0; dcomp < 2; ++dcomp) {
                    un += (f.w_owner * ustar(f.owner, dcomp) +
                           (1.0 - f.w_owner) * ustar(f.neighbour, dcomp)) *
                          f.normal[dcomp];
                    gn += (f.w_owner * gp_cells.at(f.owner, dcomp) +
                           (1.0 - f.w_owner) * gp_cells.at(f.neighbour, dcomp)) *
                          f.normal[dcomp];
                }
                const double dp = (st.p.at(f.neighbour, 0) - st.p.at(f.owner, 0)) / f.delta;
                flux[k] = (un - d_f[k] * (dp - gn)) * f.area;
            } else if (f.tag == BoundaryTag::Outlet) {
                double un = 0.0, gn = 0.0;
                for (int dcomp = 0; dcomp < 2; ++dcomp) {
                    un += ustar(f.owner, dcomp) * f.normal[dcomp];
                    gn += gp_cells.at(f.owner, dcomp) * f.normal[dcomp];
                }
                const double dp = (0.0 - st.p.at(f.owner, 0)) / f.delta;
                flux[k] = (un - d_cells[f.owner] * (dp - gn)) * f.area;
            }
        }

        // ---- pressure correction --------------------------------------------
        std::vector<Eigen::Triplet<double>> ptrip;
        Eigen::VectorXd prhs = Eigen::VectorXd::Zero(n);
        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& f = faces[k];
            if (!f.is_boundary()) {
                const double a = d_f[k] * f.area / f.delta;
                ptrip.emplace_back(f.owner, f.owner, a);
                ptrip.emplace_back(f.owner, f.neighbour, -a);
                ptrip.emplace_back(f.neighbour, f.neighbour, a);
                ptrip.emplace_back(f.neighbour, f.owner, -a);
                prhs[f.owner] -= flux[k];
                prhs[f.neighbour] += flux[k];
            } else {
                if (f.tag == BoundaryTag::Outlet)
                    ptrip.emplace_back(f.owner, f.owner, d_cells[f.owner] * f.area / f.delta);
                prhs[f.owner] -= flux[k];
            }
        }
        const double res_p = prhs.cwiseAbs().sum() / mass_scale;

        Eigen::SparseMatrix<double> p_mat(n, n);
        p_mat.setFromTriplets(ptrip.begin(), ptrip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> p_ldlt(p_mat);
        if (p_ldlt.info() != Eigen::Success)
            throw Error(ErrorCode::FomDiverged, "pressure-correction factorization failed");
        const Eigen::VectorXd pc = p_ldlt.solve(prhs);
        if (!pc.allFinite()) throw Error(ErrorCode::FomDiverged, "pressure correction diverged");

        // ---- corrections -----------------------------------------------------
        Field pc_field(mesh, 1, pc);
        const Field gpc = gradient(pc_field, rules.press);
        for (int c = 0; c < n; ++c) {
            for (int dcomp = 0; dcomp < 2; ++dcomp)
                st.u.at(c, dcomp) = ustar(c, dcomp) - d_cells[c] * gpc.at(c, dcomp);
            st.p.at(c, 0) += cfg.relax_p * pc[c];
        }
        for (size_t k = 0; k < faces.size(); ++k) {
            const FvFace& f = faces[k];
            if (!f.is_boundary())
                flux[k] -= d_f[k] * f.area / f.delta * (pc[f.neighbour] - pc[f.owner]);
            else if (f.tag == BoundaryTag::Outlet)
                flux[k] -= d_cells[f.owner] * f.area / f.delta * (0.0 - pc[f.owner]);
        }

        st.residual_u.push_back(res_u);
        st.residual_p.push_back(res_p);

        const double worst = std::max(res_u, res_p);
        if (worst < best) {
            best = worst;
            best_iter = outer;
        }
        if (outer > 2 && res_u <= cfg.tol && res_p <= cfg.tol) {
            converged = true;
            break;
        }
        if (outer - best_iter > cfg.stall_window && worst > cfg.growth_factor * best)
            throw Error(ErrorCode::FomDiverged, "outer residuals stalled/grew");
    }
    if (!converged)
        throw Error(ErrorCode::FomDiverged, "outer iteration limit reached before convergence");

    if (!cfg.closure) st.nu_t = Field(mesh, 1);

    // ---- Newton polish to the steady collocated operator form ---------------
    if (cfg.polish && cfg.convection) {
        const LinearOps ops(mesh);
        const double h = mesh->h_min();
        const double scale =
            std::max({uin.squaredNorm() / h, cfg.nu * uin.norm() / (h * h), 1e-300});
        const double tol_abs = cfg.polish_tol * scale;

        Field u_best = st.u;
        Field p_best = st.p;
        double r_best = std::numeric_limits<double>::max();
        for (int it = 0; it <= cfg.polish_max; ++it) {
            const SteadyResidual sr =
                steady_residual(st.u, st.p, st.nu_t, cfg.nu, uin, cfg.transpose_diffusion);
            Eigen::VectorXd r(3 * n);
            for (int c = 0; c < n; ++c) {
                r[c] = sr.momentum.at(c, 0);
                r[n + c] = sr.momentum.at(c, 1);
                r[2 * n + c] = sr.continuity.at(c, 0);
            }
            const double rn = r.lpNorm<Eigen::Infinity>();
            if (!std::isfinite(rn)) break;
            if (rn < r_best) {
                r_best = rn;
                u_best = st.u;
                p_best = st.p;
            }
            st.polish_iterations = it;
            if (rn <= tol_abs || it == cfg.polish_max) break;

            const Eigen::SparseMatrix<double> jac =
                steady_jacobian(ops, st.u, st.nu_t, cfg.nu, rules, true, cfg.transpose_diffusion);
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(jac);
            if (lu.info() != Eigen::Success)
                throw Error(ErrorCode::FomDiverged, "polish factorization failed");
            const Eigen::VectorXd dx = lu.solve(-r);
            if (!dx.allFinite()) break;
            for (int c = 0; c < n; ++c) {
                st.u.at(c, 0) += dx[c];
                st.u.at(c, 1) += dx[n + c];
                st.p.at(c, 0) += dx[2 * n + c];
            }
        }
        st.u = u_best;
        st.p = p_best;
        st.final_residual = r_best;
        if (r_best > 1e4 * tol_abs)
            throw Error(ErrorCode::FomDiverged, "steady-operator polish did not converge");
    } else {
        const SteadyResidual sr =
            steady_residual(st.u, st.p, st.nu_t, cfg.nu, uin, cfg.transpose_diffusion);
        double rn = 0.0;
        for (int c = 0; c < n; ++c)
            rn = std::max({rn, std::abs(sr.momentum.at(c, 0)), std::abs(sr.momentum.at(c, 1)),
                           std::abs(sr.continuity.at(c, 0))});
        st.final_residual = rn;
    }
    return st;
}

Field lifting_fv(const MeshPtr& mesh, const Eigen::Vector2d& unit_bc, const FVSolverConfig& cfg) {
    if (cfg.lifting == LiftingMode::Stokes)
        return solve_stokes_fv(mesh, unit_bc, cfg.nu, cfg.transpose_diffusion).first;
    InletBC bc;
    bc.mu1 = unit_bc.norm();
    bc.mu2 = std::atan2(unit_bc.y(), unit_bc.x()) * 180.0 / kPi;
    return solve_fom_fv(mesh, bc, cfg).u;
}

Field homogenize(const Field& u, const InletBC& bc, const std::vector<Field>& liftings) {
    if (liftings.size() != 2)
        throw Error(ErrorCode::IncompatibleFields, "homogenize expects two lifting fields");
    Field::require_compatible(u, liftings[0]);
    Field::require_compatible(u, liftings[1]);
    const Eigen::Vector2d g = bc.inlet_vector();
    return Field(u.mesh(), 2,
                 u.values() - g.x() * liftings[0].values() - g.y() * liftings[1].values());
}

Field dehomogenize(const Field& u_hom, const InletBC& bc, const std::vector<Field>& liftings) {
    if (liftings.size() != 2)
        throw Error(ErrorCode::IncompatibleFields, "dehomogenize expects two lifting fields");
    Field::require_compatible(u_hom, liftings[0]);
    Field::require_compatible(u_hom, liftings[1]);
    const Eigen::Vector2d g = bc.inlet_vector();
    return Field(u_hom.mesh(), 2,
                 u_hom.values() + g.x() * liftings[0].values() + g.y() * liftings[1].values());
}

int reattachment_index(const FVState& state, const MeshPtr& mesh) {
    const auto& centers = mesh->cell_centers();
    // bottom row of the downstream section (x > 0 with the step corner at 0)
    double ymin = std::numeric_limits<double>::max();
    for (size_t c = 0; c < centers.size(); ++c)
        if (centers[c].x() > 0.0) ymin = std::min(ymin, centers[c].y());
    std::vector<std::pair<double, int>> row;
    for (size_t c = 0; c < centers.size(); ++c)
        if (centers[c].x() > 0.0 && centers[c].y() == ymin)
            row.emplace_back(centers[c].x(), static_cast<int>(c));
    std::sort(row.begin(), row.end());
    int last_negative = -1;
    for (size_t i = 0; i < row.size(); ++i)
        if (state.u.at(row[i].second, 0) < 0.0) last_negative = static_cast<int>(i);
    return last_negative + 1;
}

}  // namespace romforge::fv
