#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fe_oracle.hpp"
#include "romforge/reduction.hpp"
#include "romforge/rom_fe.hpp"

using namespace romforge;
using namespace romforge::fe;
using namespace feoracle;

TEST_CASE("two-triangle reduced entries match the independent quadrature oracle") {
    auto m = two_triangle_mesh();
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);

    // lifting (arbitrary field) + two orthonormal velocity modes, two pressure modes
    std::vector<Field> fam = {random_field(m, 2, 1)};
    for (const Field& f : reduction::gram_schmidt({random_field(m, 2, 2), random_field(m, 2, 3)},
                                                  ip_u))
        fam.push_back(f);
    auto pmodes = reduction::gram_schmidt({random_field(m, 1, 4), random_field(m, 1, 5)}, ip_p);
    REQUIRE(fam.size() == 3);
    REQUIRE(pmodes.size() == 2);

    StabilizationConfig stab;
    stab.delta = 0.6;
    RBOptions opts;
    auto sys = project_fe(fam, pmodes, 1, stab, opts, ip_u, ip_p);

    const int nv = 3, np = 2;
    // precompute per-element per-mode gradients with the independent fit
    std::vector<std::array<Eigen::Matrix2d, 2>> vg(nv);  // [mode][element]
    std::vector<std::array<Eigen::Vector2d, 2>> pg(np);
    for (int mo = 0; mo < nv; ++mo)
        for (size_t el = 0; el < 2; ++el) {
            Eigen::Matrix2d g;
            g.row(0) = fit_gradient(*m, m->triangles()[el], fam[mo], 0).transpose();
            g.row(1) = fit_gradient(*m, m->triangles()[el], fam[mo], 1).transpose();
            vg[mo][el] = g;
        }
    for (int mo = 0; mo < np; ++mo)
        for (size_t el = 0; el < 2; ++el)
            pg[mo][el] = fit_gradient(*m, m->triangles()[el], pmodes[mo], 0);

    auto vel_at = [&](int mo, size_t el, const QuadPoint& qp) {
        return Eigen::Vector2d(eval_p1(*m, fam[mo], el, qp, 0), eval_p1(*m, fam[mo], el, qp, 1));
    };
    const double d = stab.delta;
    auto h2_of = [&](size_t el) {
        return m->element_sizes()[el] * m->element_sizes()[el];
    };

    for (int i = 0; i < nv; ++i) {
        for (int j = 0; j < nv; ++j) {
            const double diff = integrate(*m, [&](size_t el, const QuadPoint&) {
                return (vg[i][el].array() * vg[j][el].array()).sum();
            });
            CHECK(sys.diffusion(i, j) == doctest::Approx(diff).epsilon(1e-10));
            for (int k = 0; k < nv; ++k) {
                const double conv = integrate(*m, [&](size_t el, const QuadPoint& qp) {
                    return (vg[k][el] * vel_at(j, el, qp)).dot(vel_at(i, el, qp));
                });
                CHECK(sys.convection(i, j, k) == doctest::Approx(conv).epsilon(1e-10));
                for (int l = 0; l < nv; ++l) {
                    const double cub = integrate(*m, [&](size_t el, const QuadPoint& qp) {
                        return d * h2_of(el) * (vg[k][el] * vel_at(j, el, qp))
                                                   .dot(vg[i][el] * vel_at(l, el, qp));
                    });
                    CHECK(sys.stab_cubic(i, j, k, l) == doctest::Approx(cub).epsilon(1e-10));
                }
            }
            for (int q = 0; q < np; ++q) {
                const double sgp = integrate(*m, [&](size_t el, const QuadPoint& qp) {
                    return d * h2_of(el) * pg[q][el].dot(vg[i][el] * vel_at(j, el, qp));
                });
                CHECK(sys.stab_grad_p(i, j, q) == doctest::Approx(sgp).epsilon(1e-10));
            }
        }
        for (int q = 0; q < np; ++q) {
            const double g = integrate(*m, [&](size_t el, const QuadPoint& qp) {
                return -eval_p1(*m, pmodes[q], el, qp, 0) * vg[i][el].trace();
            });
            CHECK(sys.pressure_grad(i, q) == doctest::Approx(g).epsilon(1e-10));
            CHECK(sys.divergence(q, i) == doctest::Approx(-g).epsilon(1e-10));
        }
    }
    for (int q = 0; q < np; ++q) {
        for (int j = 0; j < nv; ++j)
            for (int k = 0; k < nv; ++k) {
                const double s = integrate(*m, [&](size_t el, const QuadPoint& qp) {
                    return d * h2_of(el) * (vg[k][el] * vel_at(j, el, qp)).dot(pg[q][el]);
                });
                CHECK(sys.stab_conv_q(q, j, k) == doctest::Approx(s).epsilon(1e-10));
            }
        for (int b = 0; b < np; ++b) {
            const double s = integrate(*m, [&](size_t el, const QuadPoint&) {
                return d * h2_of(el) * pg[b][el].dot(pg[q][el]);
            });
            CHECK(sys.stab_pp(q, b) == doctest::Approx(s).epsilon(1e-10));
        }
    }
}

TEST_CASE("offline-only mode zeroes the online stabilization blocks") {
    auto m = build_cavity_mesh(3);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    std::vector<Field> fam = {random_field(m, 2, 11)};
    for (const Field& f : reduction::gram_schmidt({random_field(m, 2, 12)}, ip_u))
        fam.push_back(f);
    auto pm = reduction::gram_schmidt({random_field(m, 1, 13)}, ip_p);

    RBOptions off;
    off.online_stabilization = false;
    auto sys = project_fe(fam, pm, 1, StabilizationConfig{}, off, ip_u, ip_p);
    CHECK(sys.stab_cubic.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.stab_grad_p.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.stab_conv_q.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.stab_pp.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.diffusion.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("projection rejects a non-orthonormal basis") {
    auto m = build_cavity_mesh(3);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    std::vector<Field> fam = {random_field(m, 2, 21), random_field(m, 2, 22)};  // not orthonormal
    auto pm = reduction::gram_schmidt({random_field(m, 1, 23)}, ip_p);
    try {
        project_fe(fam, pm, 1, StabilizationConfig{}, RBOptions{}, ip_u, ip_p);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidBasis);
    }
}

TEST_CASE("analytic Jacobian matches central finite differences") {
    auto m = build_cavity_mesh(3);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    std::vector<Field> fam = {random_field(m, 2, 31)};
    for (const Field& f : reduction::gram_schmidt(
             {random_field(m, 2, 32), random_field(m, 2, 33), random_field(m, 2, 34)}, ip_u))
        fam.push_back(f);
    auto pm = reduction::gram_schmidt({random_field(m, 1, 35), random_field(m, 1, 36)}, ip_p);
    auto sys = project_fe(fam, pm, 1, StabilizationConfig{}, RBOptions{}, ip_u, ip_p);

    std::mt19937 gen(77);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    const double nu = 0.02;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(sys.unknowns());
        for (int i = 0; i < x.size(); ++i) x[i] = dist(gen);
        const Eigen::MatrixXd J = sys.jacobian(x, nu, 1.0);
        Eigen::MatrixXd Jfd(sys.unknowns(), sys.unknowns());
        for (int c = 0; c < x.size(); ++c) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
            Eigen::VectorXd xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            Jfd.col(c) = (sys.residual(xp, nu, 1.0) - sys.residual(xm, nu, 1.0)) / (2.0 * h);
        }
        CHECK((J - Jfd).norm() <= 1e-6 * std::max(1.0, J.norm()));
    }
}

TEST_CASE("stokes limit converges in exactly one Newton iteration") {
    auto m = build_cavity_mesh(3);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    std::vector<Field> fam = {random_field(m, 2, 41)};
    for (const Field& f : reduction::gram_schmidt({random_field(m, 2, 42), random_field(m, 2, 43)},
                                                  ip_u))
        fam.push_back(f);
    auto pm = reduction::gram_schmidt({random_field(m, 1, 44)}, ip_p);
    auto sys = project_fe(fam, pm, 1, StabilizationConfig{}, RBOptions{}, ip_u, ip_p)
                   .without_convection();

    auto res = solve_rb_fe(sys, 0.01, 1.0);
    CHECK(res.iterations == 1);
    CHECK(res.residual_norm <= 1e-10);

    // warm start at the answer: zero additional iterations
    NewtonConfig warm;
    warm.initial.resize(sys.unknowns());
    warm.initial.head(sys.n_vel - 1) = res.a.tail(sys.n_vel - 1);
    warm.initial.tail(sys.n_p) = res.b;
    auto res2 = solve_rb_fe(sys, 0.01, 1.0, warm);
    CHECK(res2.iterations == 0);
}

TEST_CASE("training-sample consistency with the full basis") {
    auto m = build_cavity_mesh(8);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    StabilizationConfig stab;

    FESolverConfig fcfg;
    fcfg.stab = stab;
    fcfg.picard_tol = 1e-12;
    fcfg.picard_max = 400;

    const std::vector<double> res = {100.0, 300.0, 500.0};
    Field lift = lifting_fe(m, 1.0, stab);
    std::vector<Field> u_hom, p_snap;
    std::vector<FESolution> sols;
    for (double re : res) {
        auto sol = solve_fom_fe(m, re, fcfg);
        Field hom(m, 2, sol.velocity.values() - lift.values());
        u_hom.push_back(std::move(hom));
        p_snap.push_back(sol.pressure);
        sols.push_back(std::move(sol));
    }

    std::vector<Field> fam = {lift};
    for (const Field& f : reduction::gram_schmidt(u_hom, ip_u)) fam.push_back(f);
    auto pmodes = reduction::gram_schmidt(p_snap, ip_p);
    auto sys = project_fe(fam, pmodes, 1, stab, RBOptions{}, ip_u, ip_p);

    std::vector<Field> vmodes(fam.begin() + 1, fam.end());
    for (size_t s = 0; s < res.size(); ++s) {
        // projection of the snapshot onto the basis, used as warm start
        NewtonConfig warm;
        warm.initial.resize(sys.unknowns());
        for (int i = 0; i < sys.n_vel - 1; ++i)
            warm.initial[i] = ip_u(vmodes[i], u_hom[s]);
        for (int q = 0; q < sys.n_p; ++q)
            warm.initial[(sys.n_vel - 1) + q] = ip_p(pmodes[q], p_snap[s]);

        auto rb = solve_rb_fe(sys, 1.0 / res[s], 1.0, warm);
        Field u_rb = reconstruct(fam, rb.a);
        Field p_rb = reconstruct(pmodes, rb.b);

        const double proj_u = std::sqrt(reduction::projection_error_sq({u_hom[s]}, vmodes, ip_u)) /
                              ip_u.norm(sols[s].velocity);
        const double proj_p = std::sqrt(reduction::projection_error_sq({p_snap[s]}, pmodes, ip_p)) /
                              std::max(ip_p.norm(p_snap[s]), 1e-300);
        CHECK(relative_l2_error(u_rb, sols[s].velocity) <= proj_u + 1e-8);
        CHECK(relative_l2_error(p_rb, p_snap[s]) <= proj_p + 1e-8);
    }
}

TEST_CASE("single-mode system consistency at its own snapshot") {
    auto m = build_cavity_mesh(6);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    StabilizationConfig stab;

    FESolverConfig fcfg;
    fcfg.picard_tol = 1e-12;
    fcfg.picard_max = 400;
    auto sol = solve_fom_fe(m, 200.0, fcfg);
    Field lift = lifting_fe(m, 1.0, stab);
    Field hom(m, 2, sol.velocity.values() - lift.values());

    auto vmodes = reduction::gram_schmidt({hom}, ip_u);
    auto pmodes = reduction::gram_schmidt({sol.pressure}, ip_p);
    std::vector<Field> fam = {lift, vmodes[0]};
    auto sys = project_fe(fam, pmodes, 1, stab, RBOptions{}, ip_u, ip_p);
    CHECK(sys.n_vel == 2);
    CHECK(sys.n_p == 1);

    Eigen::VectorXd x(2);
    x << ip_u(vmodes[0], hom), ip_p(pmodes[0], sol.pressure);
    const Eigen::VectorXd F = sys.residual(x, 1.0 / 200.0, 1.0);
    CHECK(F.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("reconstruct identities") {
    auto m = build_cavity_mesh(3);
    auto ip = InnerProduct::build(m, 2, IpKind::L2);
    auto modes = reduction::gram_schmidt(
        {random_field(m, 2, 51), random_field(m, 2, 52), random_field(m, 2, 53)}, ip);
    REQUIRE(modes.size() == 3);

    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1[0] = 1.0;
    Field f = reconstruct(modes, e1);
    CHECK((f.values() - modes[0].values()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd a(3);
    a << 0.3, -1.7, 0.9;
    Field g = reconstruct(modes, a);
    for (int k = 0; k < 3; ++k)
        CHECK(ip(g, modes[k]) == doctest::Approx(a[k]).epsilon(1e-10));

    Eigen::VectorXd wrong(2);
    wrong << 1.0, 2.0;
    CHECK_THROWS_AS(reconstruct(modes, wrong), Error);
}
