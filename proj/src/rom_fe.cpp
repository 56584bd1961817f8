#include "romforge/rom_fe.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "fe_element.hpp"

namespace romforge::fe {

namespace {

void check_family(const std::vector<Field>& family, int arity, const MeshPtr& mesh,
                  const char* what) {
    for (const Field& f : family) {
        if (f.mesh().get() != mesh.get() || f.arity() != arity)
            throw Error(ErrorCode::IncompatibleFields,
                        std::string(what) + " family has mixed meshes or arities");
    }
}

void check_orthonormal(const std::vector<Field>& fields, size_t first, const InnerProduct& ip,
                       const char* what) {
    for (size_t i = first; i < fields.size(); ++i)
        for (size_t j = first; j <= i; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(ip(fields[i], fields[j]) - want) > 1e-8)
                throw Error(ErrorCode::InvalidBasis,
                            std::string(what) + " family is not orthonormal");
        }
}

}  // namespace

RBSystemFE project_fe(const std::vector<Field>& velocity_family,
                      const std::vector<Field>& pressure_modes, int n_lift,
                      const StabilizationConfig& stab, const RBOptions& options,
                      const InnerProduct& ip_u, const InnerProduct& ip_p) {
    stab.validate();
    if (velocity_family.empty() || pressure_modes.empty())
        throw Error(ErrorCode::InvalidBasis, "empty reduced family");
    const MeshPtr mesh = velocity_family.front().mesh();
    if (mesh->kind() != MeshKind::FeTriangular)
        throw Error(ErrorCode::IncompatibleMesh, "FE projection needs an FE mesh");
    if (n_lift < 0 || n_lift >= static_cast<int>(velocity_family.size()))
        throw Error(ErrorCode::InvalidBasis, "lifting count out of range");
    check_family(velocity_family, 2, mesh, "velocity");
    check_family(pressure_modes, 1, mesh, "pressure");
    check_orthonormal(velocity_family, n_lift, ip_u, "velocity");
    check_orthonormal(pressure_modes, 0, ip_p, "pressure");

    const int nv = static_cast<int>(velocity_family.size());
    const int np = static_cast<int>(pressure_modes.size());

    RBSystemFE sys;
    sys.n_vel = nv;
    sys.n_p = np;
    sys.online_stab = options.online_stabilization;
    sys.delta = stab.delta;
    sys.diffusion = Eigen::MatrixXd::Zero(nv, nv);
    sys.convection = Tensor3(nv, nv, nv);
    sys.pressure_grad = Eigen::MatrixXd::Zero(nv, np);
    sys.divergence = Eigen::MatrixXd::Zero(np, nv);
    sys.stab_cubic = Tensor4(nv, nv, nv, nv);
    sys.stab_grad_p = Tensor3(nv, nv, np);
    sys.stab_conv_q = Tensor3(np, nv, nv);
    sys.stab_pp = Eigen::MatrixXd::Zero(np, np);

    // scratch per element
    std::vector<Eigen::Matrix2d> grad(nv);                    // velocity gradients
    std::vector<std::array<Eigen::Vector2d, 3>> vmid(nv);     // velocity at midpoints
    std::vector<Eigen::Vector2d> pgrad(np);                   // pressure gradients
    std::vector<std::array<double, 3>> pmid(np);              // pressure at midpoints
    std::vector<Eigen::Vector2d> rmid(static_cast<size_t>(nv) * nv * 3);
    auto r_at = [&](int j, int k, int q) -> Eigen::Vector2d& {
        return rmid[(static_cast<size_t>(j) * nv + k) * 3 + q];
    };

    for (size_t el = 0; el < mesh->triangles().size(); ++el) {
        const P1Element e = element_of(*mesh, el);
        const double third = e.area / 3.0;
        const double sc = stab.delta * e.h2;

        for (int m = 0; m < nv; ++m) {
            const Field& f = velocity_family[m];
            Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
            std::array<Eigen::Vector2d, 3> nodal;
            for (int a = 0; a < 3; ++a) {
                nodal[a] = {f.at(e.n[a], 0), f.at(e.n[a], 1)};
                for (int c = 0; c < 2; ++c)
                    for (int d = 0; d < 2; ++d) g(c, d) += nodal[a][c] * e.grad(a, d);
            }
            grad[m] = g;
            for (int q = 0; q < 3; ++q)
                vmid[m][q] = kMidVal[q][0] * nodal[0] + kMidVal[q][1] * nodal[1] +
                             kMidVal[q][2] * nodal[2];
        }
        for (int m = 0; m < np; ++m) {
            const Field& f = pressure_modes[m];
            Eigen::Vector2d g = Eigen::Vector2d::Zero();
            for (int a = 0; a < 3; ++a) g += f.at(e.n[a]) * e.grad.row(a).transpose();
            pgrad[m] = g;
            for (int q = 0; q < 3; ++q)
                pmid[m][q] = kMidVal[q][0] * f.at(e.n[0]) + kMidVal[q][1] * f.at(e.n[1]) +
                             kMidVal[q][2] * f.at(e.n[2]);
        }
        for (int j = 0; j < nv; ++j)
            for (int k = 0; k < nv; ++k)
                for (int q = 0; q < 3; ++q) r_at(j, k, q) = grad[k] * vmid[j][q];

        for (int i = 0; i < nv; ++i) {
            const double divi = grad[i].trace();
            for (int j = 0; j < nv; ++j) {
                sys.diffusion(i, j) +=
                    e.area * (grad[i](0, 0) * grad[j](0, 0) + grad[i](0, 1) * grad[j](0, 1) +
                              grad[i](1, 0) * grad[j](1, 0) + grad[i](1, 1) * grad[j](1, 1));
                for (int k = 0; k < nv; ++k) {
                    double conv = 0.0;
                    for (int q = 0; q < 3; ++q) conv += r_at(j, k, q).dot(vmid[i][q]);
                    sys.convection(i, j, k) += third * conv;
                    for (int l = 0; l < nv; ++l) {
                        double cub = 0.0;
                        for (int q = 0; q < 3; ++q) cub += r_at(j, k, q).dot(r_at(l, i, q));
                        sys.stab_cubic(i, j, k, l) += sc * third * cub;
                    }
                }
                for (int q = 0; q < np; ++q) {
                    double gp = 0.0;
                    for (int m = 0; m < 3; ++m) gp += pgrad[q].dot(r_at(j, i, m));
                    sys.stab_grad_p(i, j, q) += sc * third * gp;
                }
            }
            for (int q = 0; q < np; ++q) {
                const double ip_int = third * (pmid[q][0] + pmid[q][1] + pmid[q][2]);
                // midpoint values of chi_q sum to the nodal mean; integral = area * mean
                sys.pressure_grad(i, q) += -divi * ip_int;
                sys.divergence(q, i) += divi * ip_int;
            }
        }
        for (int q = 0; q < np; ++q) {
            for (int j = 0; j < nv; ++j)
                for (int k = 0; k < nv; ++k) {
                    double s = 0.0;
                    for (int m = 0; m < 3; ++m) s += r_at(j, k, m).dot(pgrad[q]);
                    sys.stab_conv_q(q, j, k) += sc * third * s;
                }
            for (int b = 0; b < np; ++b)
                sys.stab_pp(q, b) += sc * e.area * pgrad[b].dot(pgrad[q]);
        }
    }

    if (!options.online_stabilization) {
        sys.stab_cubic = Tensor4(nv, nv, nv, nv);
        sys.stab_grad_p = Tensor3(nv, nv, np);
        sys.stab_conv_q = Tensor3(np, nv, nv);
        sys.stab_pp = Eigen::MatrixXd::Zero(np, np);
    }
    return sys;
}

Eigen::VectorXd RBSystemFE::residual(const Eigen::VectorXd& x, double nu, double a0) const {
    if (x.size() != unknowns())
        throw Error(ErrorCode::InvalidConfig, "reduced unknown vector has wrong length");
    Eigen::VectorXd a(n_vel);
    a[0] = a0;
    a.tail(n_vel - 1) = x.head(n_vel - 1);
    const Eigen::VectorXd b = x.tail(n_p);

    Eigen::VectorXd F = Eigen::VectorXd::Zero(unknowns());
    for (int i = 1; i < n_vel; ++i) {
        double r = nu * diffusion.row(i).dot(a) + pressure_grad.row(i).dot(b);
        for (int j = 0; j < n_vel; ++j)
            for (int k = 0; k < n_vel; ++k) r += convection(i, j, k) * a[j] * a[k];
        if (online_stab) {
            for (int j = 0; j < n_vel; ++j) {
                for (int k = 0; k < n_vel; ++k)
                    for (int l = 0; l < n_vel; ++l)
                        r += stab_cubic(i, j, k, l) * a[j] * a[k] * a[l];
                for (int q = 0; q < n_p; ++q) r += stab_grad_p(i, j, q) * a[j] * b[q];
            }
        }
        F[i - 1] = r;
    }
    for (int q = 0; q < n_p; ++q) {
        double r = divergence.row(q).dot(a);
        if (online_stab) {
            for (int j = 0; j < n_vel; ++j)
                for (int k = 0; k < n_vel; ++k) r += stab_conv_q(q, j, k) * a[j] * a[k];
            r += stab_pp.row(q).dot(b);
        }
        F[(n_vel - 1) + q] = r;
    }
    return F;
}

Eigen::MatrixXd RBSystemFE::jacobian(const Eigen::VectorXd& x, double nu, double a0) const {
    if (x.size() != unknowns())
        throw Error(ErrorCode::InvalidConfig, "reduced unknown vector has wrong length");
    Eigen::VectorXd a(n_vel);
    a[0] = a0;
    a.tail(n_vel - 1) = x.head(n_vel - 1);
    const Eigen::VectorXd b = x.tail(n_p);

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(unknowns(), unknowns());
    for (int i = 1; i < n_vel; ++i) {
        const int row = i - 1;
        for (int m = 1; m < n_vel; ++m) {
            double d = nu * diffusion(i, m);
            for (int k = 0; k < n_vel; ++k) d += convection(i, m, k) * a[k];
            for (int j = 0; j < n_vel; ++j) d += convection(i, j, m) * a[j];
            if (online_stab) {
                for (int k = 0; k < n_vel; ++k)
                    for (int l = 0; l < n_vel; ++l) d += stab_cubic(i, m, k, l) * a[k] * a[l];
                for (int j = 0; j < n_vel; ++j)
                    for (int l = 0; l < n_vel; ++l) d += stab_cubic(i, j, m, l) * a[j] * a[l];
                for (int j = 0; j < n_vel; ++j)
                    for (int k = 0; k < n_vel; ++k) d += stab_cubic(i, j, k, m) * a[j] * a[k];
                for (int q = 0; q < n_p; ++q) d += stab_grad_p(i, m, q) * b[q];
            }
            J(row, m - 1) = d;
        }
        for (int q = 0; q < n_p; ++q) {
            double d = pressure_grad(i, q);
            if (online_stab)
                for (int j = 0; j < n_vel; ++j) d += stab_grad_p(i, j, q) * a[j];
            J(row, (n_vel - 1) + q) = d;
        }
    }
    for (int q = 0; q < n_p; ++q) {
        const int row = (n_vel - 1) + q;
        for (int m = 1; m < n_vel; ++m) {
            double d = divergence(q, m);
            if (online_stab) {
                for (int k = 0; k < n_vel; ++k) d += stab_conv_q(q, m, k) * a[k];
                for (int j = 0; j < n_vel; ++j) d += stab_conv_q(q, j, m) * a[j];
            }
            J(row, m - 1) = d;
        }
        if (online_stab)
            for (int cb = 0; cb < n_p; ++cb) J(row, (n_vel - 1) + cb) = stab_pp(q, cb);
    }
    return J;
}

RBSystemFE RBSystemFE::without_convection() const {
    RBSystemFE s = *this;
    s.convection = Tensor3(n_vel, n_vel, n_vel);
    s.stab_cubic = Tensor4(n_vel, n_vel, n_vel, n_vel);
    s.stab_grad_p = Tensor3(n_vel, n_vel, n_p);
    s.stab_conv_q = Tensor3(n_p, n_vel, n_vel);
    return s;
}

RBSolveResult solve_rb_fe(const RBSystemFE& system, double nu, double lid_coefficient,
                          const NewtonConfig& cfg) {
    Eigen::VectorXd x = cfg.initial.size() == system.unknowns()
                            ? cfg.initial
                            : Eigen::VectorXd::Zero(system.unknowns());

    int it = 0;
    double rn = 0.0;
    while (true) {
        const Eigen::VectorXd F = system.residual(x, nu, lid_coefficient);
        rn = F.lpNorm<Eigen::Infinity>();
        if (rn <= cfg.tol) break;
        if (it >= cfg.max_iter)
            throw Error(ErrorCode::NewtonDiverged,
                        "reduced Newton exceeded max iterations, residual " + std::to_string(rn));
        const Eigen::MatrixXd J = system.jacobian(x, nu, lid_coefficient);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible())
            throw Error(ErrorCode::SingularJacobian, "reduced Jacobian is singular");
        x -= lu.solve(F);
        if (!x.allFinite())
            throw Error(ErrorCode::NewtonDiverged, "non-finite reduced Newton iterate");
        ++it;
    }

    RBSolveResult res;
    res.a.resize(system.n_vel);
    res.a[0] = lid_coefficient;
    res.a.tail(system.n_vel - 1) = x.head(system.n_vel - 1);
    res.b = x.tail(system.n_p);
    res.iterations = it;
    res.residual_norm = rn;
    return res;
}

Field reconstruct(const std::vector<Field>& modes, const Eigen::VectorXd& coef) {
    if (modes.empty()) throw Error(ErrorCode::InvalidBasis, "no modes to reconstruct from");
    if (coef.size() != static_cast<Eigen::Index>(modes.size()))
        throw Error(ErrorCode::InvalidConfig, "coefficient count does not match mode count");
    Field out(modes.front().mesh(), modes.front().arity());
    for (size_t i = 0; i < modes.size(); ++i) out.values() += coef[i] * modes[i].values();
    return out;
}

reduction::SupremizerProblem supremizer_problem_fe(const MeshPtr& mesh,
                                                   const StabilizationConfig& stab, IpKind kind) {
    if (!mesh || mesh->kind() != MeshKind::FeTriangular)
        throw Error(ErrorCode::IncompatibleMesh, "FE supremizer needs a triangular mesh");
    reduction::SupremizerProblem prob;
    prob.mesh = mesh;
    prob.gram = InnerProduct::build(mesh, 2, kind).weight();
    // b-form coupling from the unconstrained assembly; linearization state and
    // lid speed do not enter the pressure-gradient block
    const Field zero(mesh, 2);
    prob.coupling = assemble_fe(mesh, 1.0, stab, zero, 0.0).pressure_grad;
    for (const auto& [dof, value] : dirichlet_values(*mesh, 0.0)) {
        (void)value;
        prob.constrained.push_back(dof);
    }
    return prob;
}

}  // namespace romforge::fe
