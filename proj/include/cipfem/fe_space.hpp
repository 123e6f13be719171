#pragma once

// Continuous Lagrange spaces of degree 1 and 2 on a triangulation.
//
// Local dof order on a triangle: vertices 0, 1, 2, then (k = 2) the midpoints of
// local edges (0,1), (1,2), (2,0). Global numbering: vertex dofs first, then one
// dof per mesh face.

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cipfem/mesh.hpp"

namespace cipfem {

using Vector = Eigen::VectorXd;
using Mat2 = Eigen::Matrix2d;

inline constexpr int max_local_dofs = 6;

/// Affine map from the reference triangle (0,0), (1,0), (0,1) onto element K.
class ElementMap {
public:
    ElementMap(const Mesh& mesh, int element) {
        const auto& tri = mesh.triangles()[element];
        origin_ = mesh.vertex(tri[0]);
        jacobian_.col(0) = mesh.vertex(tri[1]) - origin_;
        jacobian_.col(1) = mesh.vertex(tri[2]) - origin_;
        det_ = jacobian_.determinant();
        inverse_ = jacobian_.inverse();
        const Mat2 inv_t = inverse_.transpose();
        grad_lambda_[1] = inv_t.col(0);
        grad_lambda_[2] = inv_t.col(1);
        grad_lambda_[0] = -grad_lambda_[1] - grad_lambda_[2];
    }

    Point to_physical(const Point& ref) const { return origin_ + jacobian_ * ref; }
    Point to_reference(const Point& x) const { return inverse_ * (x - origin_); }
    double det() const noexcept { return det_; }
    const Point& grad_lambda(int i) const { return grad_lambda_[i]; }

private:
    Point origin_;
    Mat2 jacobian_;
    Mat2 inverse_;
    double det_ = 0.0;
    std::array<Point, 3> grad_lambda_;
};

/// Local shape functions of one element evaluated at one point.
struct ShapeValues {
    int count = 0;
    std::array<double, max_local_dofs> value{};
    std::array<Point, max_local_dofs> grad{};
    std::array<Mat2, max_local_dofs> hess{};

    double laplacian(int i) const { return hess[i].trace(); }
};

class FeSpace {
public:
    FeSpace(const Mesh& mesh, int degree) : mesh_(&mesh), degree_(degree) {
        if (degree != 1 && degree != 2) {
            throw std::invalid_argument("FeSpace: degree must be 1 or 2");
        }
        const int nv = mesh.num_vertices();
        ndof_ = degree == 1 ? nv : nv + mesh.num_faces();
        coords_.reserve(static_cast<std::size_t>(ndof_));
        for (const Point& p : mesh.vertices()) coords_.push_back(p);
        if (degree == 2) {
            for (const Face& f : mesh.faces()) {
                coords_.push_back(0.5 * (mesh.vertex(f.vertices[0]) + mesh.vertex(f.vertices[1])));
            }
        }
        element_dofs_.resize(static_cast<std::size_t>(mesh.num_triangles()));
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            auto& dofs = element_dofs_[t];
            const auto& tri = mesh.triangles()[t];
            dofs = {tri[0], tri[1], tri[2], -1, -1, -1};
            if (degree == 2) {
                const auto& tf = mesh.triangle_faces(t);
                for (int e = 0; e < 3; ++e) dofs[3 + e] = nv + tf[e];
            }
        }
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    int degree() const noexcept { return degree_; }
    int ndof() const noexcept { return ndof_; }
    int local_dofs() const noexcept { return degree_ == 1 ? 3 : 6; }
    const std::vector<Point>& dof_coordinates() const noexcept { return coords_; }

    std::span<const int> element_dofs(int element) const {
        return {element_dofs_[element].data(), static_cast<std::size_t>(local_dofs())};
    }

    /// Dofs whose basis support contains the face: its endpoints (+ midpoint for k = 2).
    std::vector<int> face_dofs(int face) const {
        const Face& f = mesh_->faces()[face];
        std::vector<int> dofs{f.vertices[0], f.vertices[1]};
        if (degree_ == 2) dofs.push_back(mesh_->num_vertices() + face);
        return dofs;
    }

    /// Values, physical gradients and Hessians of all local shape functions at `ref`.
    ShapeValues eval_basis(const ElementMap& map, const Point& ref) const {
        ShapeValues s;
        s.count = local_dofs();
        const std::array<double, 3> lam{1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
        if (degree_ == 1) {
            for (int i = 0; i < 3; ++i) {
                s.value[i] = lam[i];
                s.grad[i] = map.grad_lambda(i);
                s.hess[i].setZero();
            }
            return s;
        }
        for (int i = 0; i < 3; ++i) {
            const Point& g = map.grad_lambda(i);
            s.value[i] = lam[i] * (2.0 * lam[i] - 1.0);
            s.grad[i] = (4.0 * lam[i] - 1.0) * g;
            s.hess[i] = 4.0 * g * g.transpose();
        }
        for (int e = 0; e < 3; ++e) {
            const int a = e;
            const int b = (e + 1) % 3;
            const Point& ga = map.grad_lambda(a);
            const Point& gb = map.grad_lambda(b);
            s.value[3 + e] = 4.0 * lam[a] * lam[b];
            s.grad[3 + e] = 4.0 * (lam[b] * ga + lam[a] * gb);
            s.hess[3 + e] = 4.0 * (ga * gb.transpose() + gb * ga.transpose());
        }
        return s;
    }

    ShapeValues eval_basis(int element, const Point& ref) const {
        return eval_basis(ElementMap(*mesh_, element), ref);
    }

    /// Value and gradient of a dof vector at a reference point of an element.
    std::pair<double, Point> evaluate(std::span<const double> dofs, int element, const Point& ref) const {
        const ShapeValues s = eval_basis(element, ref);
        const auto ed = element_dofs(element);
        double v = 0.0;
        Point g = Point::Zero();
        for (int i = 0; i < s.count; ++i) {
            v += dofs[ed[i]] * s.value[i];
            g += dofs[ed[i]] * s.grad[i];
        }
        return {v, g};
    }

private:
    const Mesh* mesh_;
    int degree_;
    int ndof_ = 0;
    std::vector<Point> coords_;
    std::vector<std::array<int, max_local_dofs>> element_dofs_;
};

/// Lagrange interpolant: point values at the dof coordinates.
inline Vector interpolate(const FeSpace& space, const std::function<double(const Point&)>& fn) {
    Vector v(space.ndof());
    const auto& coords = space.dof_coordinates();
    for (int i = 0; i < space.ndof(); ++i) v[i] = fn(coords[i]);
    return v;
}

}  // namespace cipfem
