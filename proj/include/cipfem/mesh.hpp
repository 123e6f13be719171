#pragma once

// Triangulations of the unit square with face adjacency and boundary tags.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cipfem {

using Point = Eigen::Vector2d;

/// Side of the unit square a boundary face lies on.
enum class BoundaryTag : std::uint8_t { left = 0, right = 1, bottom = 2, top = 3 };

inline constexpr std::array<BoundaryTag, 4> all_boundary_tags{
    BoundaryTag::left, BoundaryTag::right, BoundaryTag::bottom, BoundaryTag::top};

constexpr std::string_view to_string(BoundaryTag tag) noexcept {
    switch (tag) {
        case BoundaryTag::left: return "left";
        case BoundaryTag::right: return "right";
        case BoundaryTag::bottom: return "bottom";
        case BoundaryTag::top: return "top";
    }
    return "?";
}

/// An edge of the triangulation.
///
/// `triangles[0]` is the triangle the face was first seen from; the endpoints are
/// stored in that triangle's counterclockwise order, so `normal` points out of
/// `triangles[0]` (into `triangles[1]` for interior faces). Jumps are taken as
/// trace from `triangles[0]` minus trace from `triangles[1]`.
struct Face {
    std::array<int, 2> vertices{};
    std::array<int, 2> triangles{-1, -1};
    Point normal = Point::Zero();
    double length = 0.0;
    std::optional<BoundaryTag> tag;

    bool is_boundary() const noexcept { return triangles[1] < 0; }
};

struct FaceGeometry {
    Point normal;
    double length;
    std::array<int, 2> triangles;
    /// +1 when seen from triangles[0], -1 from triangles[1].
    double orientation_from(int triangle) const noexcept {
        return triangle == triangles[0] ? 1.0 : -1.0;
    }
};

class Mesh {
public:
    Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        for (const auto& t : triangles_) {
            if (signed_area(t) <= 0.0) {
                throw std::invalid_argument("Mesh: triangle with non-positive signed area");
            }
        }
        build_faces();
    }

    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    /// Global face index of local edge e of triangle t; edge e joins local vertices e and (e+1)%3.
    const std::array<int, 3>& triangle_faces(int t) const { return triangle_faces_[t]; }

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }
    int num_faces() const noexcept { return static_cast<int>(faces_.size()); }
    int num_interior_faces() const noexcept { return interior_count_; }

    const Point& vertex(int v) const { return vertices_[v]; }

    double signed_area(const std::array<int, 3>& t) const {
        const Point a = vertices_[t[1]] - vertices_[t[0]];
        const Point b = vertices_[t[2]] - vertices_[t[0]];
        return 0.5 * (a.x() * b.y() - a.y() * b.x());
    }
    double area(int t) const { return signed_area(triangles_[t]); }

    /// Diameter h_K (longest edge).
    double diameter(int t) const {
        const auto& tri = triangles_[t];
        double d = 0.0;
        for (int e = 0; e < 3; ++e) {
            d = std::max(d, (vertices_[tri[(e + 1) % 3]] - vertices_[tri[e]]).norm());
        }
        return d;
    }

    /// Global mesh size h = max_K h_K.
    double h() const noexcept { return h_max_; }
    double h_min() const noexcept { return h_min_; }

    FaceGeometry face_geometry(int face) const {
        const Face& f = faces_.at(static_cast<std::size_t>(face));
        return {f.normal, f.length, f.triangles};
    }

    Point face_point(int face, double s) const {
        const Face& f = faces_[face];
        return (1.0 - s) * vertices_[f.vertices[0]] + s * vertices_[f.vertices[1]];
    }

private:
    void build_faces() {
        triangle_faces_.assign(triangles_.size(), {-1, -1, -1});
        std::map<std::pair<int, int>, int> lookup;
        for (int t = 0; t < num_triangles(); ++t) {
            const auto& tri = triangles_[t];
            for (int e = 0; e < 3; ++e) {
                const int a = tri[e];
                const int b = tri[(e + 1) % 3];
                const auto key = std::minmax(a, b);
                auto [it, inserted] = lookup.try_emplace(key, num_faces());
                if (inserted) {
                    Face f;
                    f.vertices = {a, b};
                    f.triangles = {t, -1};
                    const Point d = vertices_[b] - vertices_[a];
                    f.length = d.norm();
                    f.normal = Point(d.y(), -d.x()) / f.length;
                    faces_.push_back(f);
                } else {
                    Face& f = faces_[it->second];
                    if (f.triangles[1] >= 0) {
                        throw std::invalid_argument("Mesh: face shared by more than two triangles");
                    }
                    f.triangles[1] = t;
                }
                triangle_faces_[t][e] = it->second;
            }
        }
        constexpr double tol = 1e-12;
        interior_count_ = 0;
        for (Face& f : faces_) {
            if (!f.is_boundary()) {
                ++interior_count_;
                continue;
            }
            const Point m = 0.5 * (vertices_[f.vertices[0]] + vertices_[f.vertices[1]]);
            if (std::abs(m.x()) < tol) {
                f.tag = BoundaryTag::left;
            } else if (std::abs(m.x() - 1.0) < tol) {
                f.tag = BoundaryTag::right;
            } else if (std::abs(m.y()) < tol) {
                f.tag = BoundaryTag::bottom;
            } else if (std::abs(m.y() - 1.0) < tol) {
                f.tag = BoundaryTag::top;
            } else {
                throw std::invalid_argument("Mesh: boundary face not on the unit square boundary");
            }
        }
        h_max_ = 0.0;
        h_min_ = std::numeric_limits<double>::infinity();
        for (int t = 0; t < num_triangles(); ++t) {
            const double d = diameter(t);
            h_max_ = std::max(h_max_, d);
            h_min_ = std::min(h_min_, d);
        }
    }

    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Face> faces_;
    std::vector<std::array<int, 3>> triangle_faces_;
    int interior_count_ = 0;
    double h_max_ = 0.0;
    double h_min_ = 0.0;
};

/// Structured n x n grid on the unit square, each cell split into two triangles
/// with alternating diagonals (union-jack). Interior vertices are displaced by a
/// seeded offset of at most `perturbation / n` per coordinate.
inline Mesh build_mesh(int n, double perturbation = 0.0, std::uint64_t seed = 0) {
    if (n < 1) {
        throw std::invalid_argument("build_mesh: n must be >= 1");
    }
    if (!(perturbation >= 0.0 && perturbation <= 0.25)) {
        throw std::invalid_argument("build_mesh: perturbation must lie in [0, 0.25]");
    }
    const int nv = n + 1;
    const double h = 1.0 / n;
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(nv * nv));
    std::mt19937_64 rng(seed);
    // Bit-level conversion keeps the offsets identical across standard libraries.
    auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    for (int j = 0; j < nv; ++j) {
        for (int i = 0; i < nv; ++i) {
            Point p(i * h, j * h);
            if (i == n) p.x() = 1.0;
            if (j == n) p.y() = 1.0;
            const bool interior = i > 0 && i < n && j > 0 && j < n;
            if (interior && perturbation > 0.0) {
                const double dx = uniform();
                const double dy = uniform();
                p += perturbation * h * Point(dx, dy);
            }
            vertices.push_back(p);
        }
    }
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(2 * n * n));
    auto id = [nv](int i, int j) { return j * nv + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = id(i, j);
            const int v10 = id(i + 1, j);
            const int v01 = id(i, j + 1);
            const int v11 = id(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                triangles.push_back({v00, v10, v11});
                triangles.push_back({v00, v11, v01});
            } else {
                triangles.push_back({v00, v10, v01});
                triangles.push_back({v10, v11, v01});
            }
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

/// Plain-text dump: vertex list, triangle list and tagged boundary faces.
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
    os.precision(17);
    os << "# cipfem mesh v1\n";
    os << "vertices " << mesh.num_vertices() << '\n';
    for (const Point& p : mesh.vertices()) {
        os << p.x() << ' ' << p.y() << '\n';
    }
    os << "triangles " << mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles()) {
        os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    int nb = 0;
    for (const Face& f : mesh.faces()) nb += f.is_boundary() ? 1 : 0;
    os << "boundary_faces " << nb << '\n';
    for (const Face& f : mesh.faces()) {
        if (f.is_boundary()) {
            os << f.vertices[0] << ' ' << f.vertices[1] << ' ' << to_string(*f.tag) << '\n';
        }
    }
}

}  // namespace cipfem
