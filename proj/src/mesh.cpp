#include "romforge/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace romforge {

namespace {

// Grid lines for one axis made of consecutive segments, each split uniformly.
std::vector<double> segment_lines(double start, const std::vector<std::pair<double, int>>& segs) {
    std::vector<double> lines{start};
    double x = start;
    for (const auto& [len, count] : segs) {
        const double step = len / count;
        for (int k = 1; k <= count; ++k) lines.push_back(x + step * k);
        x += len;
    }
    return lines;
}

int segment_count(double length, double ref) {
    return std::max(1, static_cast<int>(std::llround(length / ref)));
}

}  // namespace

BackstepGeometry BackstepGeometry::resolved() const {
    BackstepGeometry g = *this;
    if (g.inlet_height <= 0.0) g.inlet_height = g.step_height;
    if (g.upstream_length <= 0.0) g.upstream_length = 4.0 * g.step_height;
    if (g.downstream_length <= 0.0) g.downstream_length = 16.0 * g.step_height;
    return g;
}

int Mesh::dof_count() const {
    return kind_ == MeshKind::FeTriangular ? static_cast<int>(nodes_.size())
                                           : static_cast<int>(cell_centers_.size());
}

double Mesh::h_min() const { return *std::min_element(h_.begin(), h_.end()); }
double Mesh::h_max() const { return *std::max_element(h_.begin(), h_.end()); }

double Mesh::max_cell_closure_defect() const {
    double worst = 0.0;
    for (const auto& fl : cell_faces_) {
        Eigen::Vector2d acc = Eigen::Vector2d::Zero();
        for (const auto& [fid, orient] : fl) acc += orient * faces_[fid].area * faces_[fid].normal;
        worst = std::max(worst, acc.norm());
    }
    return worst;
}

void Mesh::validate() const {
    if (kind_ == MeshKind::FeTriangular) {
        for (double a : tri_areas_)
            if (!(a > 0.0)) throw Error(ErrorCode::InvalidGeometry, "non-positive triangle area");
        return;
    }
    for (double v : cell_volumes_)
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidGeometry, "non-positive cell volume");
    const double scale = h_max();
    if (max_cell_closure_defect() > 1e-12 * scale * scale)
        throw Error(ErrorCode::InvalidGeometry, "cell face normals do not close");
}

std::shared_ptr<const Mesh> Mesh::make_fe(std::vector<Eigen::Vector2d> nodes,
                                          std::vector<std::array<int, 3>> tris,
                                          std::vector<BoundaryFacet> facets,
                                          std::vector<double> h) {
    auto m = std::shared_ptr<Mesh>(new Mesh());
    m->kind_ = MeshKind::FeTriangular;
    m->nodes_ = std::move(nodes);
    m->triangles_ = std::move(tris);
    m->facets_ = std::move(facets);
    m->h_ = std::move(h);
    m->tri_areas_.reserve(m->triangles_.size());
    for (const auto& t : m->triangles_) {
        const Eigen::Vector2d e1 = m->nodes_[t[1]] - m->nodes_[t[0]];
        const Eigen::Vector2d e2 = m->nodes_[t[2]] - m->nodes_[t[0]];
        m->tri_areas_.push_back(0.5 * (e1.x() * e2.y() - e1.y() * e2.x()));
    }
    m->validate();
    return m;
}

std::shared_ptr<const Mesh> Mesh::make_fv(std::vector<Eigen::Vector2d> centers,
                                          std::vector<double> volumes, std::vector<FvFace> faces,
                                          double dx, double dy, BackstepGeometry geometry) {
    auto m = std::shared_ptr<Mesh>(new Mesh());
    m->kind_ = MeshKind::FvQuad;
    m->cell_centers_ = std::move(centers);
    m->cell_volumes_ = std::move(volumes);
    m->faces_ = std::move(faces);
    m->dx_ = dx;
    m->dy_ = dy;
    m->geometry_ = geometry;
    m->cell_faces_.assign(m->cell_centers_.size(), {});
    m->h_.resize(m->cell_centers_.size());
    std::vector<double> wx(m->cell_centers_.size(), 0.0), wy(m->cell_centers_.size(), 0.0);
    for (int f = 0; f < static_cast<int>(m->faces_.size()); ++f) {
        const FvFace& face = m->faces_[f];
        m->cell_faces_[face.owner].emplace_back(f, 1.0);
        if (face.neighbour >= 0) m->cell_faces_[face.neighbour].emplace_back(f, -1.0);
        // Track per-cell spans from opposing face pairs to form the diagonal h.
        for (int c : {face.owner, face.neighbour}) {
            if (c < 0) continue;
            const Eigen::Vector2d r = face.center - m->cell_centers_[c];
            wx[c] = std::max(wx[c], 2.0 * std::abs(r.x()));
            wy[c] = std::max(wy[c], 2.0 * std::abs(r.y()));
        }
    }
    for (size_t c = 0; c < m->h_.size(); ++c) m->h_[c] = std::hypot(wx[c], wy[c]);
    m->validate();
    return m;
}

MeshPtr build_cavity_mesh(int n) {
    if (n < 2) throw Error(ErrorCode::InvalidResolution, "cavity mesh needs n >= 2");
    const int nn = n + 1;
    const double hx = 1.0 / n;
    auto idx = [nn](int i, int j) { return j * nn + i; };

    std::vector<Eigen::Vector2d> nodes(static_cast<size_t>(nn) * nn);
    for (int j = 0; j < nn; ++j)
        for (int i = 0; i < nn; ++i) nodes[idx(i, j)] = {i * hx, j * hx};

    std::vector<std::array<int, 3>> tris;
    tris.reserve(2ull * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int p00 = idx(i, j), p10 = idx(i + 1, j);
            const int p01 = idx(i, j + 1), p11 = idx(i + 1, j + 1);
            tris.push_back({p00, p10, p11});
            tris.push_back({p00, p11, p01});
        }

    std::vector<BoundaryFacet> facets;
    facets.reserve(4ull * n);
    for (int i = 0; i < n; ++i)
        facets.push_back({idx(i, 0), idx(i + 1, 0), BoundaryTag::Wall});
    for (int j = 0; j < n; ++j)
        facets.push_back({idx(n, j), idx(n, j + 1), BoundaryTag::Wall});
    for (int i = 0; i < n; ++i)
        facets.push_back({idx(i + 1, n), idx(i, n), BoundaryTag::Inlet});
    for (int j = 0; j < n; ++j)
        facets.push_back({idx(0, j + 1), idx(0, j), BoundaryTag::Wall});

    // Frozen size metric for the structured split: the diagonal of a half-cell.
    std::vector<double> h(tris.size(), std::sqrt(2.0) / (2.0 * n));
    return Mesh::make_fe(std::move(nodes), std::move(tris), std::move(facets), std::move(h));
}

namespace {

using TagFn = std::function<BoundaryTag(const Eigen::Vector2d&, const Eigen::Vector2d&)>;
using ExistsFn = std::function<bool(double, double)>;

MeshPtr build_tensor_fv(const std::vector<double>& xl, const std::vector<double>& yl,
                        const ExistsFn& exists, const TagFn& tag_of, double dx, double dy,
                        BackstepGeometry geometry) {
    const int nx = static_cast<int>(xl.size()) - 1;
    const int ny = static_cast<int>(yl.size()) - 1;
    std::vector<int> id(static_cast<size_t>(nx) * ny, -1);
    auto gid = [&](int i, int j) -> int {
        if (i < 0 || j < 0 || i >= nx || j >= ny) return -1;
        return id[static_cast<size_t>(j) * nx + i];
    };

    std::vector<Eigen::Vector2d> centers;
    std::vector<double> vols;
    int next = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double xc = 0.5 * (xl[i] + xl[i + 1]);
            const double yc = 0.5 * (yl[j] + yl[j + 1]);
            if (!exists(xc, yc)) continue;
            id[static_cast<size_t>(j) * nx + i] = next++;
            centers.emplace_back(xc, yc);
            vols.push_back((xl[i + 1] - xl[i]) * (yl[j + 1] - yl[j]));
        }

    std::vector<FvFace> faces;
    auto add_face = [&](int owner, int neigh, double area, Eigen::Vector2d normal,
                        Eigen::Vector2d center) {
        FvFace f;
        f.owner = owner;
        f.neighbour = neigh;
        f.area = area;
        f.normal = normal;
        f.center = center;
        if (neigh >= 0) {
            f.delta = (centers[neigh] - centers[owner]).norm();
            f.w_owner = (centers[neigh] - center).norm() / f.delta;
        } else {
            f.delta = (center - centers[owner]).norm();
            f.w_owner = 1.0;
            f.tag = tag_of(center, normal);
        }
        faces.push_back(std::move(f));
    };

    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int c = gid(i, j);
            if (c < 0) continue;
            const double x0 = xl[i], x1 = xl[i + 1], y0 = yl[j], y1 = yl[j + 1];
            const double lx = x1 - x0, ly = y1 - y0;
            const Eigen::Vector2d ex{1, 0}, ey{0, 1};
            if (gid(i - 1, j) < 0)
                add_face(c, -1, ly, -ex, {x0, 0.5 * (y0 + y1)});
            const int e = gid(i + 1, j);
            add_face(c, e, ly, ex, {x1, 0.5 * (y0 + y1)});
            if (gid(i, j - 1) < 0)
                add_face(c, -1, lx, -ey, {0.5 * (x0 + x1), y0});
            const int nrow = gid(i, j + 1);
            add_face(c, nrow, lx, ey, {0.5 * (x0 + x1), y1});
        }

    return Mesh::make_fv(std::move(centers), std::move(vols), std::move(faces), dx, dy, geometry);
}

}  // namespace

MeshPtr build_backstep_mesh(const BackstepGeometry& geometry, int resolution) {
    const BackstepGeometry g = geometry.resolved();
    if (g.step_height <= 0.0 || g.inlet_height <= 0.0 || g.upstream_length <= 0.0 ||
        g.downstream_length <= 0.0)
        throw Error(ErrorCode::InvalidGeometry, "backstep dimensions must be positive");
    if (resolution < 4)
        throw Error(ErrorCode::InvalidResolution, "backstep mesh needs resolution >= 4");

    const double ref = g.step_height / resolution;
    const int n_up = segment_count(g.upstream_length, ref);
    const int n_dn = segment_count(g.downstream_length, ref);
    const int n_st = segment_count(g.step_height, ref);
    const int n_in = segment_count(g.inlet_height, ref);

    const auto xl = segment_lines(-g.upstream_length,
                                  {{g.upstream_length, n_up}, {g.downstream_length, n_dn}});
    const auto yl = segment_lines(0.0, {{g.step_height, n_st}, {g.inlet_height, n_in}});

    const double eps = 1e-9 * g.step_height;
    auto exists = [&](double xc, double yc) { return xc > 0.0 || yc > g.step_height; };
    auto tag_of = [&](const Eigen::Vector2d& c, const Eigen::Vector2d&) {
        if (std::abs(c.x() + g.upstream_length) < eps) return BoundaryTag::Inlet;
        if (std::abs(c.x() - g.downstream_length) < eps) return BoundaryTag::Outlet;
        return BoundaryTag::Wall;
    };
    return build_tensor_fv(xl, yl, exists, tag_of, ref, ref, g);
}

MeshPtr build_channel_mesh(int nx, int ny, double length, double height) {
    if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidResolution, "channel mesh needs nx,ny >= 1");
    if (length <= 0.0 || height <= 0.0)
        throw Error(ErrorCode::InvalidGeometry, "channel dimensions must be positive");
    const auto xl = segment_lines(0.0, {{length, nx}});
    const auto yl = segment_lines(0.0, {{height, ny}});
    const double eps = 1e-9 * std::max(length, height);
    auto tag_of = [&](const Eigen::Vector2d& c, const Eigen::Vector2d&) {
        if (std::abs(c.x()) < eps) return BoundaryTag::Inlet;
        if (std::abs(c.x() - length) < eps) return BoundaryTag::Outlet;
        return BoundaryTag::Wall;
    };
    BackstepGeometry g;
    g.step_height = 0.0;
    g.inlet_height = height;
    g.upstream_length = 0.0;
    g.downstream_length = length;
    return build_tensor_fv(xl, yl, [](double, double) { return true; }, tag_of, length / nx,
                           height / ny, g);
}

}  // namespace romforge
