#pragma once

// Gauss rules on the unit edge and collapsed (Duffy) Gauss rules on the reference triangle.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cipfem {

enum class Entity { triangle, edge };

/// Points are barycentric-free reference coordinates: (xi, eta) on the triangle
/// {xi, eta >= 0, xi + eta <= 1}; (s, 0) on the edge [0, 1].
struct QuadratureRule {
    std::vector<Eigen::Vector2d> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const noexcept { return weights.size(); }
};

inline constexpr int max_quadrature_degree = 8;

namespace detail {

/// Legendre P_m(z) and its derivative.
inline std::pair<double, double> legendre(int m, double z) {
    double p0 = 1.0;
    double p1 = z;
    for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, m * (z * p1 - p0) / (z * z - 1.0)};
}

/// m-point Gauss-Legendre on [0, 1].
inline void gauss_legendre_01(int m, std::vector<double>& x, std::vector<double>& w) {
    x.assign(m, 0.0);
    w.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(m, z);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double dp = legendre(m, z).second;
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace detail

/// Rule on `entity` exact for polynomials up to total degree `degree` (<= 8).
inline QuadratureRule make_quadrature(Entity entity, int degree) {
    if (degree < 0 || degree > max_quadrature_degree) {
        throw std::invalid_argument("make_quadrature: unsupported degree");
    }
    QuadratureRule rule;
    rule.degree = degree;
    std::vector<double> x;
    std::vector<double> w;
    if (entity == Entity::edge) {
        const int m = degree / 2 + 1;
        detail::gauss_legendre_01(m, x, w);
        for (int i = 0; i < m; ++i) {
            rule.points.emplace_back(x[i], 0.0);
            rule.weights.push_back(w[i]);
        }
        return rule;
    }
    // Collapsed rule: xi = u, eta = v (1 - u), Jacobian (1 - u) raises the u-degree by one.
    const int m = (degree + 2) / 2 + ((degree + 2) % 2);
    detail::gauss_legendre_01(m, x, w);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            rule.points.emplace_back(x[i], x[j] * (1.0 - x[i]));
            rule.weights.push_back(w[i] * w[j] * (1.0 - x[i]));
        }
    }
    return rule;
}

}  // namespace cipfem
