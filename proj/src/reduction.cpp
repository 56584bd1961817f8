#include "romforge/reduction.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace romforge::reduction {

ReducedBasis pod(const std::vector<Field>& snapshots, const InnerProduct& ip, BasisSize size,
                 std::string family) {
    const int ns = static_cast<int>(snapshots.size());
    if (ns == 0) throw Error(ErrorCode::EmptySnapshots, "POD needs at least one snapshot");
    if (size.count > ns)
        throw Error(ErrorCode::InvalidConfig, "requested more POD modes than snapshots");
    if (size.count < 0 && !(size.energy > 0.0 && size.energy <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "energy threshold must lie in (0,1]");

    Eigen::MatrixXd corr(ns, ns);
    for (int m = 0; m < ns; ++m)
        for (int n = m; n < ns; ++n) corr(m, n) = corr(n, m) = ip(snapshots[m], snapshots[n]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success)
        throw Error(ErrorCode::SolverFailure, "correlation eigendecomposition failed");

    // ascending from Eigen; flip to descending
    Eigen::VectorXd lam = eig.eigenvalues().reverse();
    Eigen::MatrixXd vec = eig.eigenvectors().rowwise().reverse();
    if (!(lam[0] > 0.0))
        throw Error(ErrorCode::DegenerateSnapshots, "all snapshots are numerically zero");

    int kept = 0;
    while (kept < ns && lam[kept] > 1e-12 * lam[0]) ++kept;

    int n_modes;
    if (size.count >= 0) {
        n_modes = std::min(size.count, kept);
    } else {
        const Eigen::VectorXd cum = cumulative_energy(lam.head(kept));
        n_modes = kept;
        for (int i = 0; i < kept; ++i)
            if (cum[i] >= size.energy) {
                n_modes = i + 1;
                break;
            }
    }

    ReducedBasis basis;
    basis.family = std::move(family);
    basis.eigenvalues = lam.head(kept);
    basis.modes.reserve(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        Eigen::VectorXd col = vec.col(i);
        // canonical sign: largest-magnitude coefficient positive
        int arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col[arg] < 0.0) col = -col;

        Eigen::VectorXd vals = Eigen::VectorXd::Zero(snapshots[0].size());
        for (int m = 0; m < ns; ++m) vals += col[m] * snapshots[m].values();
        Field mode(snapshots[0].mesh(), snapshots[0].arity(), std::move(vals));
        const double nrm = ip.norm(mode);
        if (!(nrm > 0.0))
            throw Error(ErrorCode::DegenerateSnapshots, "zero-norm POD mode");
        mode.values() /= nrm;
        basis.modes.push_back(std::move(mode));
    }
    return basis;
}

Eigen::VectorXd cumulative_energy(const Eigen::VectorXd& eigenvalues) {
    if (eigenvalues.size() == 0)
        throw Error(ErrorCode::DegenerateSpectrum, "empty spectrum");
    const double total = eigenvalues.sum();
    if (!(total > 0.0))
        throw Error(ErrorCode::DegenerateSpectrum, "spectrum sums to zero");
    Eigen::VectorXd cum(eigenvalues.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        acc += eigenvalues[i];
        cum[i] = acc / total;
    }
    return cum;
}

std::vector<Field> gram_schmidt(const std::vector<Field>& fields, const InnerProduct& ip,
                                std::vector<int>* dropped) {
    std::vector<Field> out;
    for (int idx = 0; idx < static_cast<int>(fields.size()); ++idx) {
        Field v = fields[idx];
        const double original = ip.norm(v);
        if (!(original > 0.0)) {
            if (dropped) dropped->push_back(idx);
            continue;
        }
        for (int pass = 0; pass < 2; ++pass)
            for (const Field& q : out) v.values() -= ip(q, v) * q.values();
        const double left = ip.norm(v);
        if (left < 1e-8 * original) {
            if (dropped) dropped->push_back(idx);
            continue;
        }
        v.values() /= left;
        out.push_back(std::move(v));
    }
    return out;
}

double projection_error_sq(const std::vector<Field>& snapshots, const std::vector<Field>& modes,
                           const InnerProduct& ip) {
    double acc = 0.0;
    for (const Field& s : snapshots) {
        Field r = s;
        for (const Field& q : modes) r.values() -= ip(q, s) * q.values();
        acc += std::max(0.0, ip(r, r));
    }
    return acc;
}

Field supremizer(const Field& p_mode, const SupremizerProblem& prob) {
    if (p_mode.mesh().get() != prob.mesh.get())
        throw Error(ErrorCode::IncompatibleFields, "pressure mode on a different mesh");

    Eigen::VectorXd rhs = prob.coupling * p_mode.values();

    // Symmetric zero-Dirichlet elimination keeps the gram SPD.
    std::vector<char> fixed(prob.gram.rows(), 0);
    for (int d : prob.constrained) fixed[d] = 1;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(prob.gram.nonZeros());
    for (int o = 0; o < prob.gram.outerSize(); ++o)
        for (Eigen::SparseMatrix<double>::InnerIterator it(prob.gram, o); it; ++it) {
            if (fixed[it.row()] || fixed[it.col()]) continue;
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        }
    for (int d : prob.constrained) {
        trips.emplace_back(d, d, 1.0);
        rhs[d] = 0.0;
    }
    Eigen::SparseMatrix<double> a(prob.gram.rows(), prob.gram.cols());
    a.setFromTriplets(trips.begin(), trips.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::SolverFailure, "supremizer factorization failed");
    Eigen::VectorXd s = solver.solve(rhs);
    if (!s.allFinite()) throw Error(ErrorCode::SolverFailure, "non-finite supremizer");
    return Field(p_mode.mesh(), 2, std::move(s));
}

GreedyResult greedy_rb(const std::vector<ParameterSample>& training, const GreedyCallbacks& cb,
                       const InnerProduct& ip_u, const InnerProduct& ip_p, double tol,
                       int n_max) {
    const int nt = static_cast<int>(training.size());
    if (nt == 0) throw Error(ErrorCode::InvalidConfig, "greedy needs training samples");
    n_max = std::min(n_max, nt);

    GreedyResult res;
    std::vector<char> used(nt, 0);
    std::vector<Field> u_raw, p_raw;

    auto enrich = [&](int idx) {
        auto [u, p] = cb.snapshot(idx);
        u_raw.push_back(std::move(u));
        p_raw.push_back(std::move(p));
        res.velocity_modes = gram_schmidt(u_raw, ip_u);
        res.pressure_modes = gram_schmidt(p_raw, ip_p);
        res.selected.push_back(idx);
        used[idx] = 1;
    };

    // start from the sample with the largest combined solution norm
    int start = 0;
    double best = -1.0;
    for (int i = 0; i < nt; ++i) {
        auto [u, p] = cb.snapshot(i);
        const double score = std::hypot(ip_u.norm(u), ip_p.norm(p));
        if (score > best) {
            best = score;
            start = i;
        }
    }
    enrich(start);

    while (static_cast<int>(res.selected.size()) < n_max) {
        int arg = -1;
        double worst = -1.0;
        for (int i = 0; i < nt; ++i) {
            if (used[i]) continue;
            const double err = cb.rom_error(i, res.velocity_modes, res.pressure_modes);
            if (err > worst) {
                worst = err;
                arg = i;
            }
        }
        if (arg < 0) break;
        res.max_errors.push_back(worst);
        if (worst <= tol) break;
        enrich(arg);
    }
    return res;
}

}  // namespace romforge::reduction
