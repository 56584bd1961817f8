#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <vector>

#include "romforge/errors.hpp"

namespace romforge {

enum class MeshKind : unsigned { FeTriangular = 0, FvQuad = 1 };
enum class BoundaryTag : unsigned { Inlet = 0, Wall = 1, Outlet = 2 };

/// Boundary edge of an FE mesh: node pair plus tag.
struct BoundaryFacet {
    int a = -1;
    int b = -1;
    BoundaryTag tag = BoundaryTag::Wall;
};

/// Face of an FV mesh. Boundary faces have neighbour == -1 and carry a tag;
/// the normal always points out of the owner cell for boundary faces and
/// from owner to neighbour for interior ones.
struct FvFace {
    int owner = -1;
    int neighbour = -1;
    double area = 0.0;
    Eigen::Vector2d normal = Eigen::Vector2d::Zero();
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    BoundaryTag tag = BoundaryTag::Wall;
    double w_owner = 1.0;  // linear interpolation weight of the owner value
    double delta = 0.0;    // owner-to-neighbour (or owner-to-face) distance

    bool is_boundary() const { return neighbour < 0; }
};

/// Backward-facing-step channel dimensions. Negative entries are resolved to
/// the standard proportions (inlet = d, upstream = 4d, downstream = 16d).
struct BackstepGeometry {
    double step_height = 50.8;
    double inlet_height = -1.0;
    double upstream_length = -1.0;
    double downstream_length = -1.0;

    BackstepGeometry resolved() const;
};

/// Immutable 2D mesh shared by both solver branches. FE-triangular meshes
/// populate the node/triangle section, FV-quad meshes the cell/face section.
class Mesh {
  public:
    MeshKind kind() const { return kind_; }
    int dof_count() const;

    // --- FE section ---------------------------------------------------------
    const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<double>& triangle_areas() const { return tri_areas_; }
    const std::vector<BoundaryFacet>& boundary_facets() const { return facets_; }

    // --- FV section ---------------------------------------------------------
    const std::vector<Eigen::Vector2d>& cell_centers() const { return cell_centers_; }
    const std::vector<double>& cell_volumes() const { return cell_volumes_; }
    const std::vector<FvFace>& faces() const { return faces_; }
    /// Per-cell list of (face id, orientation) with orientation +1 when the
    /// cell owns the face and -1 when it is the neighbour.
    const std::vector<std::vector<std::pair<int, double>>>& cell_faces() const {
        return cell_faces_;
    }
    double cell_dx() const { return dx_; }
    double cell_dy() const { return dy_; }
    const BackstepGeometry& geometry() const { return geometry_; }

    // --- common -------------------------------------------------------------
    /// Element size metric h_K: per triangle for FE, per cell for FV.
    const std::vector<double>& element_sizes() const { return h_; }
    double h_min() const;
    double h_max() const;

    /// Closed-surface defect max_c |sum_f area*normal| over the cell's faces.
    double max_cell_closure_defect() const;

    void validate() const;

    static std::shared_ptr<const Mesh> make_fe(std::vector<Eigen::Vector2d> nodes,
                                               std::vector<std::array<int, 3>> tris,
                                               std::vector<BoundaryFacet> facets,
                                               std::vector<double> h);
    static std::shared_ptr<const Mesh> make_fv(std::vector<Eigen::Vector2d> centers,
                                               std::vector<double> volumes,
                                               std::vector<FvFace> faces, double dx, double dy,
                                               BackstepGeometry geometry);

  private:
    Mesh() = default;

    MeshKind kind_ = MeshKind::FeTriangular;

    std::vector<Eigen::Vector2d> nodes_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<double> tri_areas_;
    std::vector<BoundaryFacet> facets_;

    std::vector<Eigen::Vector2d> cell_centers_;
    std::vector<double> cell_volumes_;
    std::vector<FvFace> faces_;
    std::vector<std::vector<std::pair<int, double>>> cell_faces_;
    double dx_ = 0.0;
    double dy_ = 0.0;
    BackstepGeometry geometry_;

    std::vector<double> h_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform right-triangle mesh of the unit square with 2n^2 elements.
/// The top edge is tagged Inlet (the moving lid), the rest Wall.
MeshPtr build_cavity_mesh(int n);

/// L-shaped backward-facing-step channel on a uniform quad grid with
/// resolution cells per step height d. Inlet on the upstream left boundary,
/// Outlet on the downstream right boundary, Wall elsewhere.
MeshPtr build_backstep_mesh(const BackstepGeometry& geometry, int resolution);

/// Plain rectangular duct (left Inlet, right Outlet, Wall top/bottom) on an
/// nx-by-ny quad grid. Small instances back the reduced-operator oracles.
MeshPtr build_channel_mesh(int nx, int ny, double length, double height);

}  // namespace romforge
