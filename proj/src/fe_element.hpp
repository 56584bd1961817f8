#pragma once

#include <Eigen/Dense>
#include <array>

#include "romforge/mesh.hpp"

namespace romforge::fe {

/// Per-triangle geometry for P1 assembly: constant basis gradients, the
/// consistent 3x3 mass matrix, and edge midpoints (the 3-point quadrature
/// rule exact for quadratics).
struct P1Element {
    std::array<int, 3> n{};
    double area = 0.0;
    double h2 = 0.0;
    Eigen::Matrix<double, 3, 2> grad;
    std::array<Eigen::Vector2d, 3> mid;
    Eigen::Matrix3d mass;
};

// Basis values at the edge midpoints, indexed [midpoint][vertex].
inline constexpr double kMidVal[3][3] = {
    {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

inline P1Element element_of(const Mesh& mesh, size_t k) {
    P1Element e;
    e.n = mesh.triangles()[k];
    e.area = mesh.triangle_areas()[k];
    const double h = mesh.element_sizes()[k];
    e.h2 = h * h;
    const Eigen::Vector2d& p0 = mesh.nodes()[e.n[0]];
    const Eigen::Vector2d& p1 = mesh.nodes()[e.n[1]];
    const Eigen::Vector2d& p2 = mesh.nodes()[e.n[2]];
    const double inv2a = 1.0 / (2.0 * e.area);
    e.grad.row(0) = inv2a * Eigen::RowVector2d(p1.y() - p2.y(), p2.x() - p1.x());
    e.grad.row(1) = inv2a * Eigen::RowVector2d(p2.y() - p0.y(), p0.x() - p2.x());
    e.grad.row(2) = inv2a * Eigen::RowVector2d(p0.y() - p1.y(), p1.x() - p0.x());
    e.mid = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    e.mass << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    e.mass *= e.area / 12.0;
    return e;
}

}  // namespace romforge::fe
