#pragma once

// Test problems on the unit square: coefficients, boundary roles,
// manufactured solution and the data derived from it.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "cipfem/mesh.hpp"
#include "cipfem/quadrature.hpp"

namespace cipfem {

using ScalarFn = std::function<double(const Point&)>;
using VectorFn = std::function<Point(const Point&)>;
using MatrixFn = std::function<Eigen::Matrix2d(const Point&)>;

enum class StabilisationMode { cip, gls, cip_gls };

constexpr std::string_view to_string(StabilisationMode m) noexcept {
    switch (m) {
        case StabilisationMode::cip: return "cip";
        case StabilisationMode::gls: return "gls";
        case StabilisationMode::cip_gls: return "cip+gls";
    }
    return "?";
}

inline StabilisationMode parse_stabilisation_mode(std::string_view s) {
    if (s == "cip") return StabilisationMode::cip;
    if (s == "gls") return StabilisationMode::gls;
    if (s == "cip+gls") return StabilisationMode::cip_gls;
    throw std::invalid_argument("unknown stabilisation mode: " + std::string(s));
}

/// Dimensionless multipliers applied on top of the problem's face weights.
struct StabilisationParams {
    double gamma1 = 0.01;     ///< gradient jumps
    double gamma2 = 0.01;     ///< Laplacian jumps (no effect for k = 1)
    double gamma_gls = 0.0;   ///< element residual least squares
    double gamma_bc = 10.0;   ///< boundary penalties
    StabilisationMode mode = StabilisationMode::cip;
    /// Include the |(beta.n)_-+| trace term in the Dirichlet boundary penalty.
    bool convective_bc_term = true;

    bool uses_gls() const noexcept { return mode != StabilisationMode::cip; }

    /// Multipliers as they act in the forms: cip zeroes GLS, gls zeroes the Laplacian jumps.
    StabilisationParams effective() const {
        if (gamma1 < 0 || gamma2 < 0 || gamma_gls < 0 || gamma_bc < 0) {
            throw std::invalid_argument("StabilisationParams: multipliers must be non-negative");
        }
        StabilisationParams p = *this;
        if (mode == StabilisationMode::cip) p.gamma_gls = 0.0;
        if (mode == StabilisationMode::gls) p.gamma2 = 0.0;
        return p;
    }
};

inline StabilisationParams default_params(int degree) {
    StabilisationParams p;
    p.gamma1 = p.gamma2 = degree == 1 ? 0.01 : 0.001;
    p.gamma_bc = 10.0;
    return p;
}

/// How a boundary side enters the discrete problem.
enum class BoundaryRole {
    unassigned,    ///< rejected by assembly
    strong_data,   ///< Dirichlet value imposed by Nitsche terms + penalty
    neumann_data,  ///< conormal flux -mu grad u.n + (beta.n) u prescribed
    cauchy_data,   ///< both value and normal derivative prescribed
    free           ///< nothing prescribed
};

struct ExactSolution {
    ScalarFn value;
    VectorFn grad;
    MatrixFn hess;

    double laplacian(const Point& x) const { return hess(x).trace(); }

    /// 30 x (1-x) y (1-y): vanishes on the boundary, unit L2 norm.
    static ExactSolution bubble() {
        return {[](const Point& p) { return 30.0 * p.x() * (1 - p.x()) * p.y() * (1 - p.y()); },
                [](const Point& p) {
                    const double x = p.x(), y = p.y();
                    return Point(30.0 * (1 - 2 * x) * y * (1 - y), 30.0 * x * (1 - x) * (1 - 2 * y));
                },
                [](const Point& p) {
                    const double x = p.x(), y = p.y();
                    Eigen::Matrix2d h;
                    h << -60.0 * y * (1 - y), 30.0 * (1 - 2 * x) * (1 - 2 * y),
                        30.0 * (1 - 2 * x) * (1 - 2 * y), -60.0 * x * (1 - x);
                    return h;
                }};
    }

    /// c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2
    static ExactSolution quadratic(const std::array<double, 6>& c) {
        return {[c](const Point& p) {
                    const double x = p.x(), y = p.y();
                    return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
                },
                [c](const Point& p) {
                    const double x = p.x(), y = p.y();
                    return Point(c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y);
                },
                [c](const Point&) {
                    Eigen::Matrix2d h;
                    h << 2 * c[3], c[4], c[4], 2 * c[5];
                    return h;
                }};
    }

    static ExactSolution zero() { return quadratic({0, 0, 0, 0, 0, 0}); }

    ExactSolution shifted(double shift) const {
        ExactSolution s = *this;
        s.value = [v = value, shift](const Point& p) { return v(p) + shift; };
        return s;
    }
};

/// Integral of fn over the unit square (exact for polynomials of degree <= 8).
inline double integrate_unit_square(const ScalarFn& fn, int cells = 8) {
    const Mesh mesh = build_mesh(cells);
    const QuadratureRule q = make_quadrature(Entity::triangle, max_quadrature_degree);
    double sum = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const Point a = mesh.vertex(tri[0]);
        const Point b = mesh.vertex(tri[1]) - a;
        const Point c = mesh.vertex(tri[2]) - a;
        const double det = 2.0 * mesh.area(t);
        for (std::size_t i = 0; i < q.size(); ++i) {
            sum += q.weights[i] * det * fn(a + q.points[i].x() * b + q.points[i].y() * c);
        }
    }
    return sum;
}

/// Operator L u = -mu Lap u + div(beta u) + (c + kappa) u with its data.
///
/// `g_N` is the conormal flux -mu grad u.n + (beta.n) u on neumann_data sides and
/// the normal derivative grad u.n on cauchy_data sides; a problem never mixes the two.
struct ProblemSpec {
    std::string name;
    double mu = 1.0;
    VectorFn beta = [](const Point&) { return Point(0.0, 0.0); };
    ScalarFn div_beta = [](const Point&) { return 0.0; };
    ScalarFn c = [](const Point&) { return 0.0; };
    double kappa = 0.0;
    std::array<BoundaryRole, 4> roles{};
    ExactSolution exact;
    ScalarFn f;
    ScalarFn g_D;
    std::function<double(const Point&, const Point&)> g_N;
    bool needs_mean_constraint = false;

    BoundaryRole role(BoundaryTag tag) const { return roles[static_cast<int>(tag)]; }
    double reaction(const Point& x) const { return c(x) + kappa; }

    /// Strong operator applied to the exact solution.
    double apply_operator(const ExactSolution& u, const Point& x) const {
        return -mu * u.laplacian(x) + div_beta(x) * u.value(x) + beta(x).dot(u.grad(x)) +
               reaction(x) * u.value(x);
    }

    StabilisationParams default_params(int degree) const { return cipfem::default_params(degree); }
};

namespace detail {

inline Point swirl_sink_velocity(const Point& p) { return -100.0 * Point(p.x() + p.y(), p.y() - p.x()); }

inline void set_convection(ProblemSpec& p) {
    p.mu = 1.0;
    p.beta = swirl_sink_velocity;
    p.div_beta = [](const Point&) { return -200.0; };
}

inline void derive_data(ProblemSpec& p, bool conormal_flux) {
    const ExactSolution u = p.exact;
    p.f = [problem = p, u](const Point& x) { return problem.apply_operator(u, x); };
    p.g_D = u.value;
    if (conormal_flux) {
        p.g_N = [u, beta = p.beta, mu = p.mu](const Point& x, const Point& n) {
            return -mu * u.grad(x).dot(n) + beta(x).dot(n) * u.value(x);
        };
    } else {
        p.g_N = [u](const Point& x, const Point& n) { return u.grad(x).dot(n); };
    }
}

inline std::array<BoundaryRole, 4> roles_with_data(std::initializer_list<BoundaryTag> data,
                                                   BoundaryRole data_role, BoundaryRole rest) {
    std::array<BoundaryRole, 4> r{rest, rest, rest, rest};
    for (BoundaryTag t : data) r[static_cast<int>(t)] = data_role;
    return r;
}

}  // namespace detail

/// Convection-diffusion, Dirichlet data on all sides.
inline ProblemSpec make_dirichlet_cd(ExactSolution exact = ExactSolution::bubble()) {
    ProblemSpec p;
    p.name = "dirichlet-cd";
    detail::set_convection(p);
    p.roles = detail::roles_with_data({}, BoundaryRole::strong_data, BoundaryRole::strong_data);
    p.exact = std::move(exact);
    detail::derive_data(p, true);
    return p;
}

/// Convection-diffusion with conormal flux data on all sides; solutions are
/// normalised to zero mean, so the exact solution is shifted by -mean(u) and all
/// data are derived from the shifted function.
inline ProblemSpec make_neumann_cd(ExactSolution base = ExactSolution::bubble()) {
    ProblemSpec p;
    p.name = "neumann-cd";
    detail::set_convection(p);
    p.roles = detail::roles_with_data({}, BoundaryRole::neumann_data, BoundaryRole::neumann_data);
    p.exact = base.shifted(-integrate_unit_square(base.value));
    p.needs_mean_constraint = true;
    detail::derive_data(p, true);
    return p;
}

/// Laplace Cauchy problem: value and normal derivative on x = 0 and y = 1.
inline ProblemSpec make_cauchy_poisson(ExactSolution exact = ExactSolution::bubble()) {
    ProblemSpec p;
    p.name = "cauchy-poisson";
    p.mu = 1.0;
    p.kappa = 0.0;
    p.roles = detail::roles_with_data({BoundaryTag::left, BoundaryTag::top}, BoundaryRole::cauchy_data,
                                      BoundaryRole::free);
    p.exact = std::move(exact);
    detail::derive_data(p, false);
    return p;
}

/// Convection-diffusion Cauchy problem. Case 1: data on x = 0 and y = 1;
/// case 2: data on the inflow sides y = 0 and x = 1.
inline ProblemSpec make_cauchy_cd(int which, ExactSolution exact = ExactSolution::bubble()) {
    if (which != 1 && which != 2) {
        throw std::invalid_argument("make_cauchy_cd: case must be 1 or 2");
    }
    ProblemSpec p;
    p.name = which == 1 ? "cauchy-cd-case1" : "cauchy-cd-case2";
    detail::set_convection(p);
    if (which == 1) {
        p.roles = detail::roles_with_data({BoundaryTag::left, BoundaryTag::top}, BoundaryRole::cauchy_data,
                                          BoundaryRole::free);
    } else {
        p.roles = detail::roles_with_data({BoundaryTag::bottom, BoundaryTag::right},
                                          BoundaryRole::cauchy_data, BoundaryRole::free);
    }
    p.exact = std::move(exact);
    detail::derive_data(p, false);
    return p;
}

inline ProblemSpec make_problem(std::string_view name, ExactSolution exact = ExactSolution::bubble()) {
    if (name == "dirichlet-cd") return make_dirichlet_cd(std::move(exact));
    if (name == "neumann-cd") return make_neumann_cd(std::move(exact));
    if (name == "cauchy-poisson") return make_cauchy_poisson(std::move(exact));
    if (name == "cauchy-cd-case1") return make_cauchy_cd(1, std::move(exact));
    if (name == "cauchy-cd-case2") return make_cauchy_cd(2, std::move(exact));
    throw std::invalid_argument("unknown problem: " + std::string(name));
}

inline constexpr std::array<std::string_view, 5> problem_names{
    "dirichlet-cd", "neumann-cd", "cauchy-poisson", "cauchy-cd-case1", "cauchy-cd-case2"};

}  // namespace cipfem
