#pragma once

// Error functionals and experimental orders of convergence.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "cipfem/fe_space.hpp"
#include "cipfem/problems.hpp"
#include "cipfem/quadrature.hpp"
#include "cipfem/sparse.hpp"

namespace cipfem {

namespace detail {

template <class Integrand>
double integrate_elements(const FeSpace& space, const Vector& uh, Integrand&& integrand) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule q = make_quadrature(Entity::triangle, max_quadrature_degree);
    double sum = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const ElementMap map(mesh, t);
        const auto dofs = space.element_dofs(t);
        for (std::size_t p = 0; p < q.size(); ++p) {
            const ShapeValues s = space.eval_basis(map, q.points[p]);
            double v = 0.0;
            Point g = Point::Zero();
            for (int i = 0; i < s.count; ++i) {
                v += uh[dofs[i]] * s.value[i];
                g += uh[dofs[i]] * s.grad[i];
            }
            sum += q.weights[p] * std::abs(map.det()) * integrand(map.to_physical(q.points[p]), v, g);
        }
    }
    return sum;
}

}  // namespace detail

/// ||u - u_h||_{L2}
inline double l2_error(const FeSpace& space, const Vector& uh, const ScalarFn& exact) {
    return std::sqrt(detail::integrate_elements(space, uh, [&](const Point& x, double v, const Point&) {
        const double e = v - exact(x);
        return e * e;
    }));
}

inline double l2_norm(const FeSpace& space, const Vector& uh) {
    return std::sqrt(detail::integrate_elements(space, uh, [](const Point&, double v, const Point&) { return v * v; }));
}

/// Integral of u_h over the domain.
inline double integral(const FeSpace& space, const Vector& uh) {
    return detail::integrate_elements(space, uh, [](const Point&, double v, const Point&) { return v; });
}

/// ||grad(u - u_h)||_{L2}
inline double h1_seminorm_error(const FeSpace& space, const Vector& uh, const VectorFn& exact_grad) {
    return std::sqrt(detail::integrate_elements(space, uh, [&](const Point& x, double, const Point& g) {
        return (g - exact_grad(x)).squaredNorm();
    }));
}

/// sqrt( sum_F h_F ||grad(u - u_h).n||_F^2 ) over boundary faces.
inline double boundary_flux_error(const FeSpace& space, const Vector& uh, const VectorFn& exact_grad) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule q = make_quadrature(Entity::edge, max_quadrature_degree);
    double sum = 0.0;
    for (int fi = 0; fi < mesh.num_faces(); ++fi) {
        const Face& f = mesh.faces()[fi];
        if (!f.is_boundary()) continue;
        const int t = f.triangles[0];
        const ElementMap map(mesh, t);
        const auto dofs = space.element_dofs(t);
        for (std::size_t p = 0; p < q.size(); ++p) {
            const Point x = mesh.face_point(fi, q.points[p].x());
            const ShapeValues s = space.eval_basis(map, map.to_reference(x));
            Point g = Point::Zero();
            for (int i = 0; i < s.count; ++i) g += uh[dofs[i]] * s.grad[i];
            const double e = (exact_grad(x) - g).dot(f.normal);
            sum += q.weights[p] * f.length * f.length * e * e;
        }
    }
    return std::sqrt(sum);
}

/// sqrt( u^T S u + residual of the data-carrying terms ).
inline double stab_seminorm(const Vector& u, const SparseOperator& interior, double data_residual) {
    return std::sqrt(std::max(interior.quadratic_form(u) + data_residual, 0.0));
}

/// log2(e[j-1] / e[j]); absent for the first level and whenever the ratio is not
/// finite or the error grew.
inline std::vector<std::optional<double>> compute_eoc(std::span<const double> errors) {
    std::vector<std::optional<double>> eoc(errors.size());
    for (std::size_t j = 1; j < errors.size(); ++j) {
        const double r = std::log2(errors[j - 1] / errors[j]);
        if (std::isfinite(r) && r >= 0.0) eoc[j] = r;
    }
    return eoc;
}

}  // namespace cipfem
