// Independent cell-sum oracle for the reduced FV operators, shared by the
// module tests and the acceptance suite. Everything here re-evaluates the
// discrete operators per cell through the signed cell->face incidence
// (mesh.cell_faces()), never through the fv_ops accumulation path, and sums
// the volume pairing directly.
#pragma once

#include <random>
#include <vector>

#include "romforge/rom_fv.hpp"

namespace fvoracle {

using namespace romforge;
using namespace romforge::fv;

inline Field random_field(const MeshPtr& mesh, int arity, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Field f(mesh, arity);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.values()[i] = dist(gen);
    return f;
}

/// Boundary rules of the j-th column of the velocity family with liftings.
inline BoundaryRules column_rules(int j) {
    if (j == 0) return BoundaryRules::velocity({1.0, 0.0});
    if (j == 1) return BoundaryRules::velocity({0.0, 1.0});
    return BoundaryRules::velocity_mode();
}

inline double oracle_face(const Mesh& m, int k, const Field& f, int comp,
                          const BoundaryRules& r) {
    const FvFace& face = m.faces()[static_cast<size_t>(k)];
    if (!face.is_boundary())
        return face.w_owner * f.at(face.owner, comp) +
               (1.0 - face.w_owner) * f.at(face.neighbour, comp);
    const BoundaryRule& rule = r.of(face.tag);
    return rule.kind == FaceBc::Dirichlet ? rule.value[comp] : f.at(face.owner, comp);
}

inline double oracle_dudn(const Mesh& m, int k, const Field& f, int comp,
                          const BoundaryRules& r) {
    const FvFace& face = m.faces()[static_cast<size_t>(k)];
    if (!face.is_boundary())
        return (f.at(face.neighbour, comp) - f.at(face.owner, comp)) / face.delta;
    const BoundaryRule& rule = r.of(face.tag);
    if (rule.kind != FaceBc::Dirichlet) return 0.0;
    return (rule.value[comp] - f.at(face.owner, comp)) / face.delta;
}

/// (phi, lap f): cell-by-cell signed flux sums; the 1/V of the operator
/// cancels the volume weight of the pairing.
inline double oracle_pair_lap(const Mesh& m, const Field& phi, const Field& f,
                              const BoundaryRules& r) {
    double total = 0.0;
    for (size_t c = 0; c < m.cell_volumes().size(); ++c)
        for (int d = 0; d < 2; ++d) {
            double flux = 0.0;
            for (const auto& [k, sign] : m.cell_faces()[c])
                flux += sign * oracle_dudn(m, k, f, d, r) * m.faces()[static_cast<size_t>(k)].area;
            total += phi.at(static_cast<int>(c), d) * flux;
        }
    return total;
}

inline double oracle_pair_divergence(const Mesh& m, const Field& chi, const Field& f,
                                     const BoundaryRules& r) {
    double total = 0.0;
    for (size_t c = 0; c < m.cell_volumes().size(); ++c) {
        double flux = 0.0;
        for (const auto& [k, sign] : m.cell_faces()[c]) {
            const FvFace& face = m.faces()[static_cast<size_t>(k)];
            for (int d = 0; d < 2; ++d)
                flux += sign * oracle_face(m, k, f, d, r) * face.normal[d] * face.area;
        }
        total += chi.at(static_cast<int>(c), 0) * flux;
    }
    return total;
}

inline double oracle_pair_grad(const Mesh& m, const Field& phi, const Field& chi,
                               const BoundaryRules& r) {
    double total = 0.0;
    for (size_t c = 0; c < m.cell_volumes().size(); ++c)
        for (int d = 0; d < 2; ++d) {
            double flux = 0.0;
            for (const auto& [k, sign] : m.cell_faces()[c]) {
                const FvFace& face = m.faces()[static_cast<size_t>(k)];
                flux += sign * oracle_face(m, k, chi, 0, r) * face.normal[d] * face.area;
            }
            total += phi.at(static_cast<int>(c), d) * flux;
        }
    return total;
}

inline double oracle_pair_div_outer(const Mesh& m, const Field& phi, const Field& transported,
                                    const BoundaryRules& rt, const Field& flux_field,
                                    const BoundaryRules& rf) {
    double total = 0.0;
    for (size_t c = 0; c < m.cell_volumes().size(); ++c)
        for (int d = 0; d < 2; ++d) {
            double flux = 0.0;
            for (const auto& [k, sign] : m.cell_faces()[c]) {
                const FvFace& face = m.faces()[static_cast<size_t>(k)];
                const double mass = (oracle_face(m, k, flux_field, 0, rf) * face.normal.x() +
                                     oracle_face(m, k, flux_field, 1, rf) * face.normal.y()) *
                                    face.area;
                flux += sign * oracle_face(m, k, transported, d, rt) * mass;
            }
            total += phi.at(static_cast<int>(c), d) * flux;
        }
    return total;
}

/// Cell Gauss gradient rows d(u_m)/dx, again through the signed incidence.
inline Eigen::Matrix2d oracle_cell_gradient(const Mesh& m, int c, const Field& u,
                                            const BoundaryRules& r) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    for (const auto& [k, sign] : m.cell_faces()[static_cast<size_t>(c)]) {
        const FvFace& face = m.faces()[static_cast<size_t>(k)];
        for (int row = 0; row < 2; ++row)
            g.row(row) += sign * oracle_face(m, k, u, row, r) * face.area *
                          face.normal.transpose() / m.cell_volumes()[static_cast<size_t>(c)];
    }
    return g;
}

inline double oracle_pair_div_transpose(const Mesh& m, const Field& phi, const Field& u,
                                        const BoundaryRules& ru, const Field* eta) {
    std::vector<Eigen::Matrix2d> g(m.cell_volumes().size());
    for (size_t c = 0; c < g.size(); ++c)
        g[c] = oracle_cell_gradient(m, static_cast<int>(c), u, ru);
    const BoundaryRules zg = BoundaryRules::viscosity();
    double total = 0.0;
    for (size_t c = 0; c < g.size(); ++c)
        for (int d = 0; d < 2; ++d) {
            double flux = 0.0;
            for (const auto& [k, sign] : m.cell_faces()[c]) {
                const FvFace& face = m.faces()[static_cast<size_t>(k)];
                Eigen::Matrix2d gf = g[static_cast<size_t>(face.owner)];
                if (!face.is_boundary())
                    gf = face.w_owner * g[static_cast<size_t>(face.owner)] +
                         (1.0 - face.w_owner) * g[static_cast<size_t>(face.neighbour)];
                double t = 0.0;
                for (int mm = 0; mm < 2; ++mm) t += gf(mm, d) * face.normal[mm];
                const double ef = eta ? oracle_face(m, k, *eta, 0, zg) : 1.0;
                flux += sign * ef * t * face.area;
            }
            total += phi.at(static_cast<int>(c), d) * flux;
        }
    return total;
}

inline double oracle_pair_scaled_lap(const Mesh& m, const Field& phi, const Field& eta,
                                     const Field& f, const BoundaryRules& r) {
    double total = 0.0;
    for (size_t c = 0; c < m.cell_volumes().size(); ++c)
        for (int d = 0; d < 2; ++d) {
            double flux = 0.0;
            for (const auto& [k, sign] : m.cell_faces()[c])
                flux += sign * oracle_dudn(m, k, f, d, r) * m.faces()[static_cast<size_t>(k)].area;
            total += phi.at(static_cast<int>(c), d) * eta.at(static_cast<int>(c), 0) * flux;
        }
    return total;
}

/// Random reduced instance on a 3x3-cell channel: two liftings, two velocity
/// modes, one supremizer, two pressure and two viscosity fields.
struct SmallSetup {
    MeshPtr mesh;
    std::vector<Field> vel;   // [L1, L2, 2 modes]
    std::vector<Field> sups;  // 1 column
    std::vector<Field> press;
    std::vector<Field> visc;
    ReducedOperatorsFV ops;
};

inline SmallSetup small_setup(double nu = 0.7) {
    SmallSetup s;
    s.mesh = build_channel_mesh(3, 3, 1.5, 1.0);
    s.vel = {random_field(s.mesh, 2, 11), random_field(s.mesh, 2, 12), random_field(s.mesh, 2, 13),
             random_field(s.mesh, 2, 14)};
    s.sups = {random_field(s.mesh, 2, 15)};
    s.press = {random_field(s.mesh, 1, 21), random_field(s.mesh, 1, 22)};
    s.visc = {random_field(s.mesh, 1, 31), random_field(s.mesh, 1, 32)};
    s.ops = assemble_reduced(s.vel, s.press, s.sups, s.visc, s.mesh, nu);
    return s;
}

}  // namespace fvoracle
