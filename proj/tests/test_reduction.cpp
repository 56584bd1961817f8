#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "romforge/fe_fom.hpp"
#include "romforge/reduction.hpp"

using namespace romforge;
using namespace romforge::reduction;

namespace {

Field random_field(const MeshPtr& mesh, int arity, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Field f(mesh, arity);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.values()[i] = dist(gen);
    return f;
}

MeshPtr two_triangle_mesh() {
    std::vector<Eigen::Vector2d> nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}};
    std::vector<BoundaryFacet> facets = {{0, 1, BoundaryTag::Wall},
                                         {1, 2, BoundaryTag::Wall},
                                         {2, 3, BoundaryTag::Inlet},
                                         {3, 0, BoundaryTag::Wall}};
    std::vector<double> h = {std::sqrt(2.0), std::sqrt(2.0)};
    return Mesh::make_fe(std::move(nodes), std::move(tris), std::move(facets), std::move(h));
}

}  // namespace

TEST_CASE("pod of a single snapshot") {
    auto m = build_cavity_mesh(3);
    auto ip = InnerProduct::build(m, 2, IpKind::L2);
    Field s = random_field(m, 2, 1);
    auto basis = pod({s}, ip, BasisSize::fixed(1), "velocity");
    REQUIRE(basis.count() == 1);
    const double nrm = ip.norm(s);
    CHECK(basis.eigenvalues[0] == doctest::Approx(nrm * nrm).epsilon(1e-12));
    // mode is s normalized, up to sign
    const double align = ip(basis.modes[0], s) / nrm;
    CHECK(std::abs(align) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pod of two orthonormal snapshots") {
    auto m = build_cavity_mesh(3);
    auto ip = InnerProduct::build(m, 1, IpKind::L2);
    auto on = gram_schmidt({random_field(m, 1, 2), random_field(m, 1, 3)}, ip);
    REQUIRE(on.size() == 2);
    auto basis = pod(on, ip, BasisSize::fixed(2), "pressure");
    REQUIRE(basis.count() == 2);
    CHECK(basis.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(basis.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
    const auto cum = cumulative_energy(basis.eigenvalues);
    CHECK(cum[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cum[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pod matches the weighted-SVD oracle") {
    auto m = build_cavity_mesh(2);  // 9 nodes, non-diagonal mass matrix
    auto ip = InnerProduct::build(m, 1, IpKind::L2);
    const int ns = 5;
    std::vector<Field> snaps;
    for (int i = 0; i < ns; ++i) snaps.push_back(random_field(m, 1, 10 + i));

    auto basis = pod(snaps, ip, BasisSize::fixed(ns), "velocity");

    // oracle: factor the weight, SVD the weighted snapshot matrix
    Eigen::MatrixXd W = Eigen::MatrixXd(ip.weight());
    Eigen::LLT<Eigen::MatrixXd> llt(W);
    REQUIRE(llt.info() == Eigen::Success);
    Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd S(m->dof_count(), ns);
    for (int i = 0; i < ns; ++i) S.col(i) = snaps[i].values();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L.transpose() * S,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sigma = svd.singularValues();
    const Eigen::MatrixXd modes_oracle =
        L.transpose().triangularView<Eigen::Upper>().solve(svd.matrixU());

    REQUIRE(basis.count() == ns);
    for (int i = 0; i < ns; ++i) {
        CHECK(basis.eigenvalues[i] ==
              doctest::Approx(sigma[i] * sigma[i]).epsilon(1e-10));
        const double dot =
            basis.modes[i].values().dot(W * modes_oracle.col(i));  // ip alignment
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("pod error handling") {
    auto m = build_cavity_mesh(2);
    auto ip = InnerProduct::build(m, 1, IpKind::L2);
    try {
        pod({}, ip, BasisSize::fixed(1), "velocity");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySnapshots);
    }
    Field zero(m, 1);
    try {
        pod({zero, zero}, ip, BasisSize::fixed(1), "velocity");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateSnapshots);
    }
    Field s = random_field(m, 1, 4);
    CHECK_THROWS_AS(pod({s}, ip, BasisSize::fixed(2), "velocity"), Error);
}

TEST_CASE("pod energy threshold picks the smallest sufficient count") {
    auto m = build_cavity_mesh(3);
    auto ip = InnerProduct::build(m, 1, IpKind::L2);
    auto on = gram_schmidt({random_field(m, 1, 31), random_field(m, 1, 32),
                            random_field(m, 1, 33)}, ip);
    REQUIRE(on.size() == 3);
    // scaled orthonormal fields give known spectrum {16, 4, 1} (any order-preserving scale)
    std::vector<Field> snaps;
    for (int i = 0; i < 3; ++i) {
        Field s = on[i];
        s.values() *= (i == 0 ? 4.0 : i == 1 ? 2.0 : 1.0);
        snaps.push_back(std::move(s));
    }
    auto basis = pod(snaps, ip, BasisSize::threshold(16.0 / 21.0 + 1e-12), "velocity");
    CHECK(basis.count() == 2);  // 16/21 < threshold needs two modes
    auto basis1 = pod(snaps, ip, BasisSize::threshold(0.5), "velocity");
    CHECK(basis1.count() == 1);
}

TEST_CASE("cumulative energy basics and the reference column shape") {
    Eigen::VectorXd two(2);
    two << 4.0, 4.0;
    const auto c2 = cumulative_energy(two);
    CHECK(c2[0] == doctest::Approx(0.5));
    CHECK(c2[1] == doctest::Approx(1.0));

    Eigen::VectorXd one(1);
    one << 1.0;
    CHECK(cumulative_energy(one)[0] == doctest::Approx(1.0));

    // reference cumulative column: monotone non-decreasing, capped at 1
    const std::vector<double> ref = {0.971992, 0.993017, 0.997589, 0.999196, 0.999545,
                                     0.999828, 0.999914, 0.999952, 0.999978, 0.999986};
    for (size_t i = 0; i + 1 < ref.size(); ++i) CHECK(ref[i] <= ref[i + 1]);
    for (double v : ref) CHECK(v <= 1.0);

    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3);
    try {
        cumulative_energy(zeros);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateSpectrum);
    }
}

TEST_CASE("gram-schmidt identities") {
    auto m = build_cavity_mesh(3);
    auto ip = InnerProduct::build(m, 2, IpKind::H1Full);

    // already-orthonormal input passes through
    auto on = gram_schmidt({random_field(m, 2, 41), random_field(m, 2, 42)}, ip);
    auto again = gram_schmidt(on, ip);
    REQUIRE(again.size() == on.size());
    for (size_t i = 0; i < on.size(); ++i)
        CHECK((again[i].values() - on[i].values()).cwiseAbs().maxCoeff() <= 1e-12);

    // exact dependence drops
    Field v = random_field(m, 2, 43);
    Field v2(m, 2, 2.0 * v.values());
    std::vector<int> dropped;
    auto out = gram_schmidt({v, v2}, ip, &dropped);
    CHECK(out.size() == 1);
    REQUIRE(dropped.size() == 1);
    CHECK(dropped[0] == 1);

    // random input gives identity Gram matrix
    std::vector<Field> many;
    for (int i = 0; i < 6; ++i) many.push_back(random_field(m, 2, 50 + i));
    auto q = gram_schmidt(many, ip);
    REQUIRE(q.size() == 6);
    for (size_t i = 0; i < q.size(); ++i)
        for (size_t j = 0; j < q.size(); ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHECK(ip(q[i], q[j]) == doctest::Approx(want).epsilon(1e-10));
        }
}

TEST_CASE("pod optimality over random subspaces and the eigenvalue identity") {
    auto m = build_cavity_mesh(3);
    auto ip = InnerProduct::build(m, 1, IpKind::L2);
    const int ns = 5;
    std::vector<Field> snaps;
    for (int i = 0; i < ns; ++i) snaps.push_back(random_field(m, 1, 60 + i));

    auto basis = pod(snaps, ip, BasisSize::fixed(ns), "velocity");
    std::mt19937 gen(99);
    std::normal_distribution<double> dist;

    for (int n = 1; n <= ns; ++n) {
        std::vector<Field> keep(basis.modes.begin(), basis.modes.begin() + n);
        const double pod_err = projection_error_sq(snaps, keep, ip);

        // identity: discarded eigenvalues match the squared projection error
        const double discarded = basis.eigenvalues.tail(basis.eigenvalues.size() - n).sum();
        const double scale = std::max(1e-30, basis.eigenvalues.sum());
        CHECK(std::abs(discarded - pod_err) <= 1e-8 * scale);

        for (int trial = 0; trial < 100; ++trial) {
            // random n-dimensional subspace of the snapshot span
            std::vector<Field> cand;
            for (int k = 0; k < n; ++k) {
                Field f(m, 1);
                for (const Field& s : snaps) {
                    const double c = dist(gen);
                    f.values() += c * s.values();
                }
                cand.push_back(std::move(f));
            }
            auto q = gram_schmidt(cand, ip);
            const double rand_err = projection_error_sq(snaps, q, ip);
            CHECK(pod_err <= rand_err + 1e-10);
        }
    }
}

TEST_CASE("supremizer basics and the dense-solve oracle") {
    auto m = two_triangle_mesh();
    const int nn = m->dof_count();

    Field w(m, 2);
    auto ops = fe::assemble_fe(m, 1.0, fe::StabilizationConfig{}, w);
    SupremizerProblem prob;
    prob.mesh = m;
    prob.gram = InnerProduct::build(m, 2, IpKind::H1Full).weight();
    prob.coupling = ops.pressure_grad;
    for (const auto& [dof, val] : fe::dirichlet_values(*m, 1.0)) prob.constrained.push_back(dof);

    Field zero_p(m, 1);
    CHECK(supremizer(zero_p, prob).values().cwiseAbs().maxCoeff() == 0.0);

    Field p = random_field(m, 1, 71);
    Field s1 = supremizer(p, prob);
    Field p3(m, 1, 3.0 * p.values());
    Field s3 = supremizer(p3, prob);
    CHECK((s3.values() - 3.0 * s1.values()).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, s3.values().cwiseAbs().maxCoeff()));

    // dense oracle on the free DOFs
    Eigen::MatrixXd W = Eigen::MatrixXd(prob.gram);
    Eigen::VectorXd rhs = prob.coupling * p.values();
    std::vector<int> free_dofs;
    std::vector<char> fixed(2 * nn, 0);
    for (int d : prob.constrained) fixed[d] = 1;
    for (int d = 0; d < 2 * nn; ++d)
        if (!fixed[d]) free_dofs.push_back(d);
    Eigen::MatrixXd Wff(free_dofs.size(), free_dofs.size());
    Eigen::VectorXd rf(free_dofs.size());
    for (size_t a = 0; a < free_dofs.size(); ++a) {
        rf[a] = rhs[free_dofs[a]];
        for (size_t b = 0; b < free_dofs.size(); ++b) Wff(a, b) = W(free_dofs[a], free_dofs[b]);
    }
    const Eigen::VectorXd sf = Wff.fullPivLu().solve(rf);
    for (size_t a = 0; a < free_dofs.size(); ++a)
        CHECK(s1.values()[free_dofs[a]] == doctest::Approx(sf[a]).epsilon(1e-10));
    for (int d : prob.constrained) CHECK(s1.values()[d] == 0.0);
}

TEST_CASE("greedy selection mechanics with a projection-error objective") {
    auto m = build_cavity_mesh(3);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);

    const int nt = 5;
    std::vector<ParameterSample> training;
    std::vector<Field> us, ps;
    for (int i = 0; i < nt; ++i) {
        Eigen::VectorXd mu(1);
        mu << 100.0 + i;
        training.emplace_back(mu);
        us.push_back(random_field(m, 2, 80 + i));
        ps.push_back(random_field(m, 1, 90 + i));
    }

    GreedyCallbacks cb;
    cb.snapshot = [&](int i) { return std::make_pair(us[i], ps[i]); };
    cb.rom_error = [&](int i, const std::vector<Field>& ub, const std::vector<Field>& pb) {
        const double eu = std::sqrt(projection_error_sq({us[i]}, ub, ip_u)) / ip_u.norm(us[i]);
        const double ep = std::sqrt(projection_error_sq({ps[i]}, pb, ip_p)) / ip_p.norm(ps[i]);
        return eu + ep;
    };

    auto res = greedy_rb(training, cb, ip_u, ip_p, 1e-12, nt);
    CHECK(res.selected.size() == nt);
    // selection order visits each sample once
    std::vector<char> seen(nt, 0);
    for (int idx : res.selected) {
        CHECK(!seen[idx]);
        seen[idx] = 1;
    }
    // full basis reproduces the training set
    for (int i = 0; i < nt; ++i)
        CHECK(cb.rom_error(i, res.velocity_modes, res.pressure_modes) <= 1e-10);
    // recorded max errors are non-increasing
    for (size_t k = 0; k + 1 < res.max_errors.size(); ++k)
        CHECK(res.max_errors[k] >= res.max_errors[k + 1] - 1e-12);

    // single training sample
    auto res1 = greedy_rb({training[0]}, cb, ip_u, ip_p, 1e-12, 3);
    CHECK(res1.selected.size() == 1);
    CHECK(cb.rom_error(0, res1.velocity_modes, res1.pressure_modes) <= 1e-10);
}

TEST_CASE("greedy propagates solver failures") {
    auto m = build_cavity_mesh(2);
    auto ip_u = InnerProduct::build(m, 2, IpKind::L2);
    auto ip_p = InnerProduct::build(m, 1, IpKind::L2);
    std::vector<ParameterSample> training;
    Eigen::VectorXd mu(1);
    mu << 100.0;
    training.emplace_back(mu);
    GreedyCallbacks cb;
    cb.snapshot = [&](int) -> std::pair<Field, Field> {
        throw Error(ErrorCode::FomDiverged, "training solve blew up");
    };
    cb.rom_error = [](int, const std::vector<Field>&, const std::vector<Field>&) { return 0.0; };
    try {
        greedy_rb(training, cb, ip_u, ip_p, 1e-10, 1);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FomDiverged);
    }
}
