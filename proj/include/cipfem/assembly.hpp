#pragma once

// Sparse operators and data vectors of the primal-dual stabilised system.
//
// Matrices follow the convention A(i, j) = a_h(phi_j, phi_i): rows are test functions.
//
// The bilinear form starts from the conservation form
//   (mu grad u, grad v) + (div(beta u) + (c + kappa) u, v)
// and adds boundary terms according to each side's role:
//   strong_data  : -<mu grad u.n, v> - <mu grad v.n, u> - <(beta.n)_- u, v>
//   neumann_data : -<(beta.n) u, v>
//   cauchy_data  : -<mu grad v.n, u> - <(beta.n) u, v>
//   free         : -<mu grad u.n, v>
// Each choice is consistent for the exact solution and adjoint consistent for a
// dual solution vanishing with its flux on the complementary sides.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cipfem/fe_space.hpp"
#include "cipfem/mesh.hpp"
#include "cipfem/problems.hpp"
#include "cipfem/quadrature.hpp"
#include "cipfem/sparse.hpp"

namespace cipfem {

enum class Side { primal, adjoint };

inline int triangle_quadrature_degree(int k) { return 2 * k + 4; }
inline int edge_quadrature_degree(int k) { return 2 * k + 2; }

namespace detail {

using LocalMatrix = Eigen::Matrix<double, max_local_dofs, max_local_dofs>;
using LocalVector = Eigen::Matrix<double, max_local_dofs, 1>;

/// One quadrature point on a boundary face, seen from its only element.
struct BoundaryPoint {
    int face;
    BoundaryTag tag;
    Point x;
    double s;       ///< edge parameter in [0, 1]
    double weight;  ///< quadrature weight times face length
    Point normal;
    double h_face;
    const ShapeValues* shape;
    std::span<const int> dofs;
};

template <class Visitor>
void for_each_boundary_point(const FeSpace& space, Visitor&& visit) {
    const Mesh& mesh = space.mesh();
    const QuadratureRule q = make_quadrature(Entity::edge, edge_quadrature_degree(space.degree()));
    for (int fi = 0; fi < mesh.num_faces(); ++fi) {
        const Face& f = mesh.faces()[fi];
        if (!f.is_boundary()) continue;
        const int t = f.triangles[0];
        const ElementMap map(mesh, t);
        const auto dofs = space.element_dofs(t);
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double s = q.points[i].x();
            const Point x = mesh.face_point(fi, s);
            const ShapeValues sv = space.eval_basis(map, map.to_reference(x));
            visit(BoundaryPoint{fi, *f.tag, x, s, q.weights[i] * f.length, f.normal, f.length, &sv, dofs});
        }
    }
}

/// A symmetric trace penalty  weight * T(u) T(v),  T(u) = a u + b grad u.n,
/// with `datum` the value of T on the exact solution (0 on the adjoint side).
struct TracePenalty {
    double weight;
    double value_coeff;
    double normal_coeff;
    double datum;
};

struct PenaltySet {
    std::array<TracePenalty, 2> terms{};
    int count = 0;
    void push(TracePenalty t) { terms[count++] = t; }
};

inline PenaltySet penalty_terms(const FeSpace& space, const ProblemSpec& problem, const StabilisationParams& params,
                                Side side, const BoundaryPoint& bp) {
    PenaltySet set;
    const double g = params.gamma_bc;
    const double mu = problem.mu;
    const double h = bp.h_face;
    const bool primal = side == Side::primal;
    switch (problem.role(bp.tag)) {
        case BoundaryRole::strong_data: {
            const double datum = primal ? problem.g_D(bp.x) : 0.0;
            set.push({g * mu / h, 1.0, 0.0, datum});
            if (params.convective_bc_term) {
                const double bn = problem.beta(bp.x).dot(bp.normal);
                // |(beta.n)_-| on the primal side, |(beta.n)_+| on the adjoint side
                const double w = primal ? std::max(-bn, 0.0) : std::max(bn, 0.0);
                if (w > 0.0) set.push({w, 1.0, 0.0, datum});
            }
            break;
        }
        case BoundaryRole::neumann_data: {
            if (primal) {
                Point beta = problem.beta(bp.x);
                if (space.degree() == 1) {
                    // nodal interpolant of beta restricted to the face
                    const Mesh& mesh = space.mesh();
                    const Face& f = mesh.faces()[bp.face];
                    beta = (1.0 - bp.s) * problem.beta(mesh.vertex(f.vertices[0])) +
                           bp.s * problem.beta(mesh.vertex(f.vertices[1]));
                }
                // mu grad u.n - (beta.n) u equals -g_N on the exact solution
                set.push({g * h, -beta.dot(bp.normal), mu, -problem.g_N(bp.x, bp.normal)});
            } else {
                set.push({g * h, 0.0, 1.0, 0.0});
            }
            break;
        }
        // The Cauchy trace penalties are unweighted; gamma_bc scales only the
        // Dirichlet and Neumann penalties.
        case BoundaryRole::cauchy_data:
            if (primal) {
                set.push({1.0 / h, 1.0, 0.0, problem.g_D(bp.x)});
                set.push({h, 0.0, 1.0, problem.g_N(bp.x, bp.normal)});
            }
            break;
        case BoundaryRole::unassigned: break;
        case BoundaryRole::free:
            if (!primal) {
                set.push({1.0 / h, 1.0, 0.0, 0.0});
                set.push({h, 0.0, 1.0, 0.0});
            }
            break;
    }
    return set;
}

/// Face weights of the gradient-jump (mu + max|beta.n| h_F) and Laplacian-jump (mu) terms.
inline std::pair<double, double> cip_face_weights(const ProblemSpec& problem, const Mesh& mesh, int face,
                                                  const QuadratureRule& q) {
    const Face& f = mesh.faces()[face];
    double bn = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        bn = std::max(bn, std::abs(problem.beta(mesh.face_point(face, q.points[i].x())).dot(f.normal)));
    }
    for (double s : {0.0, 1.0}) bn = std::max(bn, std::abs(problem.beta(mesh.face_point(face, s)).dot(f.normal)));
    return {problem.mu + bn * f.length, problem.mu};
}

inline void require_roles(const FeSpace& space, const ProblemSpec& problem) {
    for (const Face& f : space.mesh().faces()) {
        if (f.is_boundary() && problem.role(*f.tag) == BoundaryRole::unassigned) {
            throw std::invalid_argument("boundary side '" + std::string(to_string(*f.tag)) +
                                        "' has no assigned role");
        }
    }
}

/// Strong operator (primal) or its formal adjoint applied to shape function i.
inline double apply_strong(const ProblemSpec& problem, Side side, const ShapeValues& s, int i, const Point& x) {
    const double diffusion = -problem.mu * s.laplacian(i);
    const Point beta = problem.beta(x);
    if (side == Side::primal) {
        return diffusion + beta.dot(s.grad[i]) + (problem.div_beta(x) + problem.reaction(x)) * s.value[i];
    }
    return diffusion - beta.dot(s.grad[i]) + problem.reaction(x) * s.value[i];
}

}  // namespace detail

/// Matrix of the discrete bilinear form a_h.
inline SparseOperator assemble_a(const FeSpace& space, const ProblemSpec& problem) {
    const Mesh& mesh = space.mesh();
    const int nl = space.local_dofs();
    detail::require_roles(space, problem);
    TripletBuilder builder(space.ndof(), space.ndof());
    const QuadratureRule q = make_quadrature(Entity::triangle, triangle_quadrature_degree(space.degree()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const ElementMap map(mesh, t);
        detail::LocalMatrix local = detail::LocalMatrix::Zero();
        for (std::size_t p = 0; p < q.size(); ++p) {
            const Point x = map.to_physical(q.points[p]);
            const ShapeValues s = space.eval_basis(map, q.points[p]);
            const double w = q.weights[p] * std::abs(map.det());
            const Point beta = problem.beta(x);
            const double r = problem.div_beta(x) + problem.reaction(x);
            for (int i = 0; i < nl; ++i) {
                for (int j = 0; j < nl; ++j) {
                    local(i, j) += w * (problem.mu * s.grad[j].dot(s.grad[i]) +
                                        (beta.dot(s.grad[j]) + r * s.value[j]) * s.value[i]);
                }
            }
        }
        const auto dofs = space.element_dofs(t);
        builder.add_local(dofs, dofs, local);
    }
    detail::for_each_boundary_point(space, [&](const detail::BoundaryPoint& bp) {
        const ShapeValues& s = *bp.shape;
        const double mu = problem.mu;
        const double bn = problem.beta(bp.x).dot(bp.normal);
        const BoundaryRole role = problem.role(bp.tag);
        detail::LocalMatrix local = detail::LocalMatrix::Zero();
        for (int i = 0; i < nl; ++i) {
            const double vi = s.value[i];
            const double dni = s.grad[i].dot(bp.normal);
            for (int j = 0; j < nl; ++j) {
                const double uj = s.value[j];
                const double dnj = s.grad[j].dot(bp.normal);
                double term = 0.0;
                switch (role) {
                    case BoundaryRole::strong_data:
                        term = -mu * dnj * vi - mu * dni * uj - 0.5 * (bn - std::abs(bn)) * uj * vi;
                        break;
                    case BoundaryRole::neumann_data: term = -bn * uj * vi; break;
                    case BoundaryRole::cauchy_data: term = -mu * dni * uj - bn * uj * vi; break;
                    case BoundaryRole::free: term = -mu * dnj * vi; break;
                    case BoundaryRole::unassigned: break;
                }
                local(i, j) += bp.weight * term;
            }
        }
        builder.add_local(bp.dofs, bp.dofs, local);
    });
    return builder.finalize();
}

/// Continuous interior penalty on gradient and Laplacian jumps over interior faces.
inline SparseOperator assemble_scip(const FeSpace& space, const StabilisationParams& params,
                                    const ProblemSpec& problem) {
    const StabilisationParams p = params.effective();
    const Mesh& mesh = space.mesh();
    const int nl = space.local_dofs();
    TripletBuilder builder(space.ndof(), space.ndof());
    const QuadratureRule q = make_quadrature(Entity::edge, edge_quadrature_degree(space.degree()));
    for (int fi = 0; fi < mesh.num_faces(); ++fi) {
        const Face& f = mesh.faces()[fi];
        if (f.is_boundary()) continue;
        const auto [w1, w2] = detail::cip_face_weights(problem, mesh, fi, q);
        const double h = f.length;
        const double c1 = p.gamma1 * w1 * h;
        const double c2 = space.degree() > 1 ? p.gamma2 * w2 * h * h * h : 0.0;

        // union of the two elements' dofs, with the local index on each side
        std::vector<int> dofs;
        std::array<std::array<int, max_local_dofs>, 2> slot{};
        for (int side = 0; side < 2; ++side) {
            const auto ed = space.element_dofs(f.triangles[side]);
            for (int i = 0; i < nl; ++i) {
                auto it = std::find(dofs.begin(), dofs.end(), ed[i]);
                if (it == dofs.end()) {
                    dofs.push_back(ed[i]);
                    it = dofs.end() - 1;
                }
                slot[side][i] = static_cast<int>(it - dofs.begin());
            }
        }
        const int nd = static_cast<int>(dofs.size());
        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nd, nd);
        const ElementMap m0(mesh, f.triangles[0]);
        const ElementMap m1(mesh, f.triangles[1]);
        std::vector<Point> jg(static_cast<std::size_t>(nd));
        std::vector<double> jl(static_cast<std::size_t>(nd));
        for (std::size_t qp = 0; qp < q.size(); ++qp) {
            const Point x = mesh.face_point(fi, q.points[qp].x());
            std::fill(jg.begin(), jg.end(), Point::Zero());
            std::fill(jl.begin(), jl.end(), 0.0);
            const ShapeValues s0 = space.eval_basis(m0, m0.to_reference(x));
            const ShapeValues s1 = space.eval_basis(m1, m1.to_reference(x));
            for (int i = 0; i < nl; ++i) {
                jg[slot[0][i]] += s0.grad[i];
                jl[slot[0][i]] += s0.laplacian(i);
                jg[slot[1][i]] -= s1.grad[i];
                jl[slot[1][i]] -= s1.laplacian(i);
            }
            const double w = q.weights[qp] * f.length;
            for (int a = 0; a < nd; ++a) {
                for (int b = 0; b < nd; ++b) {
                    local(a, b) += w * (c1 * jg[b].dot(jg[a]) + c2 * jl[b] * jl[a]);
                }
            }
        }
        // products w * a * b round differently from w * b * a; averaging makes S bitwise symmetric
        local = 0.5 * (local + local.transpose()).eval();
        builder.add_local(dofs, dofs, local);
    }
    return builder.finalize();
}

/// Galerkin least squares term (gamma_gls h_K^2 L phi_j, L phi_i)_h (L* on the adjoint side)
/// and, on the primal side, the data vector (f, gamma_gls h_K^2 L phi_i)_h.
inline std::pair<SparseOperator, Vector> assemble_sgls(const FeSpace& space, const ProblemSpec& problem,
                                                       const StabilisationParams& params, Side side) {
    const StabilisationParams p = params.effective();
    if (!p.uses_gls()) {
        throw std::invalid_argument("assemble_sgls: stabilisation mode does not include GLS");
    }
    const Mesh& mesh = space.mesh();
    const int nl = space.local_dofs();
    TripletBuilder builder(space.ndof(), space.ndof());
    Vector data = Vector::Zero(space.ndof());
    const QuadratureRule q = make_quadrature(Entity::triangle, triangle_quadrature_degree(space.degree()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const ElementMap map(mesh, t);
        const double hk = mesh.diameter(t);
        const double tau = p.gamma_gls * hk * hk;
        detail::LocalMatrix local = detail::LocalMatrix::Zero();
        detail::LocalVector rhs = detail::LocalVector::Zero();
        for (std::size_t qp = 0; qp < q.size(); ++qp) {
            const Point x = map.to_physical(q.points[qp]);
            const ShapeValues s = space.eval_basis(map, q.points[qp]);
            const double w = q.weights[qp] * std::abs(map.det()) * tau;
            std::array<double, max_local_dofs> l{};
            for (int i = 0; i < nl; ++i) l[i] = detail::apply_strong(problem, side, s, i, x);
            for (int i = 0; i < nl; ++i) {
                for (int j = 0; j < nl; ++j) local(i, j) += w * l[j] * l[i];
            }
            if (side == Side::primal) {
                const double fx = problem.f(x);
                for (int i = 0; i < nl; ++i) rhs[i] += w * fx * l[i];
            }
        }
        const auto dofs = space.element_dofs(t);
        local = 0.5 * (local + local.transpose()).eval();
        builder.add_local(dofs, dofs, local);
        for (int i = 0; i < nl; ++i) data[dofs[i]] += rhs[i];
    }
    return {builder.finalize(), data};
}

/// Boundary penalty of s_p (primal) or s_a (adjoint) and the vector s_bc(u, phi_i)
/// obtained by feeding the boundary data through the same form (zero on the adjoint side).
inline std::pair<SparseOperator, Vector> assemble_boundary_penalty(const FeSpace& space, const ProblemSpec& problem,
                                                                   Side side, const StabilisationParams& params) {
    const int nl = space.local_dofs();
    TripletBuilder builder(space.ndof(), space.ndof());
    Vector data = Vector::Zero(space.ndof());
    detail::require_roles(space, problem);
    detail::for_each_boundary_point(space, [&](const detail::BoundaryPoint& bp) {
        const detail::PenaltySet set = detail::penalty_terms(space, problem, params, side, bp);
        if (set.count == 0) return;
        const ShapeValues& s = *bp.shape;
        detail::LocalMatrix local = detail::LocalMatrix::Zero();
        for (int k = 0; k < set.count; ++k) {
            const auto& term = set.terms[k];
            std::array<double, max_local_dofs> tr{};
            for (int i = 0; i < nl; ++i) {
                tr[i] = term.value_coeff * s.value[i] + term.normal_coeff * s.grad[i].dot(bp.normal);
            }
            const double w = bp.weight * term.weight;
            for (int i = 0; i < nl; ++i) {
                for (int j = 0; j < nl; ++j) local(i, j) += w * tr[j] * tr[i];
                data[bp.dofs[i]] += w * term.datum * tr[i];
            }
        }
        local = 0.5 * (local + local.transpose()).eval();
        builder.add_local(bp.dofs, bp.dofs, local);
    });
    return {builder.finalize(), data};
}

/// Right-hand sides of the coupled system.
///
/// F1[i] = (f, phi_i) + a_h(u, phi_i) - (L u, phi_i), the second part being the
/// boundary data the Nitsche terms see. F2[i] = -s_p(u, phi_i): interior jump terms
/// vanish on the smooth exact solution, leaving boundary penalty data and, with
/// GLS, -(f, tau L phi_i)_h.
inline std::pair<Vector, Vector> assemble_rhs(const FeSpace& space, const ProblemSpec& problem,
                                              const StabilisationParams& params) {
    const Mesh& mesh = space.mesh();
    const int nl = space.local_dofs();
    detail::require_roles(space, problem);
    Vector f1 = Vector::Zero(space.ndof());
    const QuadratureRule q = make_quadrature(Entity::triangle, triangle_quadrature_degree(space.degree()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const ElementMap map(mesh, t);
        const auto dofs = space.element_dofs(t);
        for (std::size_t qp = 0; qp < q.size(); ++qp) {
            const Point x = map.to_physical(q.points[qp]);
            const ShapeValues s = space.eval_basis(map, q.points[qp]);
            const double w = q.weights[qp] * std::abs(map.det()) * problem.f(x);
            for (int i = 0; i < nl; ++i) f1[dofs[i]] += w * s.value[i];
        }
    }
    detail::for_each_boundary_point(space, [&](const detail::BoundaryPoint& bp) {
        const ShapeValues& s = *bp.shape;
        const double mu = problem.mu;
        const double bn = problem.beta(bp.x).dot(bp.normal);
        for (int i = 0; i < nl; ++i) {
            const double vi = s.value[i];
            const double dni = s.grad[i].dot(bp.normal);
            double term = 0.0;
            switch (problem.role(bp.tag)) {
                case BoundaryRole::strong_data: {
                    const double gd = problem.g_D(bp.x);
                    term = -mu * dni * gd - 0.5 * (bn - std::abs(bn)) * gd * vi;
                    break;
                }
                case BoundaryRole::neumann_data: term = -problem.g_N(bp.x, bp.normal) * vi; break;
                case BoundaryRole::cauchy_data: {
                    const double gd = problem.g_D(bp.x);
                    term = mu * problem.g_N(bp.x, bp.normal) * vi - mu * dni * gd - bn * gd * vi;
                    break;
                }
                case BoundaryRole::free:
                case BoundaryRole::unassigned: break;
            }
            f1[bp.dofs[i]] += bp.weight * term;
        }
    });
    Vector f2 = -assemble_boundary_penalty(space, problem, Side::primal, params).second;
    if (params.effective().uses_gls()) {
        f2 -= assemble_sgls(space, problem, params, Side::primal).second;
    }
    return {f1, f2};
}

/// Full stabilisation operator s_p or s_a: CIP + boundary penalty (+ GLS).
inline SparseOperator assemble_stabilisation(const FeSpace& space, const ProblemSpec& problem,
                                             const StabilisationParams& params, Side side) {
    SparseOperator s = assemble_scip(space, params, problem) +
                       assemble_boundary_penalty(space, problem, side, params).first;
    if (params.effective().uses_gls()) s = s + assemble_sgls(space, problem, params, side).first;
    return s;
}

/// Boundary penalty evaluated on the residual against data:
///   sum of  weight * (T(u_h) - datum)^2  over boundary quadrature points.
inline double boundary_penalty_residual(const FeSpace& space, const ProblemSpec& problem,
                                        const StabilisationParams& params, Side side, const Vector& uh) {
    const int nl = space.local_dofs();
    double sum = 0.0;
    detail::for_each_boundary_point(space, [&](const detail::BoundaryPoint& bp) {
        const detail::PenaltySet set = detail::penalty_terms(space, problem, params, side, bp);
        const ShapeValues& s = *bp.shape;
        double value = 0.0;
        double dn = 0.0;
        for (int i = 0; i < nl; ++i) {
            value += uh[bp.dofs[i]] * s.value[i];
            dn += uh[bp.dofs[i]] * s.grad[i].dot(bp.normal);
        }
        for (int k = 0; k < set.count; ++k) {
            const auto& t = set.terms[k];
            const double r = t.value_coeff * value + t.normal_coeff * dn - t.datum;
            sum += bp.weight * t.weight * r * r;
        }
    });
    return sum;
}

/// GLS term on the residual against data: sum_K tau_K ||L u_h - f||_K^2 (L* u_h on the adjoint side).
inline double gls_residual(const FeSpace& space, const ProblemSpec& problem, const StabilisationParams& params,
                           Side side, const Vector& uh) {
    const StabilisationParams p = params.effective();
    if (!p.uses_gls()) return 0.0;
    const Mesh& mesh = space.mesh();
    const int nl = space.local_dofs();
    const QuadratureRule q = make_quadrature(Entity::triangle, triangle_quadrature_degree(space.degree()));
    double sum = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const ElementMap map(mesh, t);
        const double hk = mesh.diameter(t);
        const auto dofs = space.element_dofs(t);
        for (std::size_t qp = 0; qp < q.size(); ++qp) {
            const Point x = map.to_physical(q.points[qp]);
            const ShapeValues s = space.eval_basis(map, q.points[qp]);
            double r = side == Side::primal ? -problem.f(x) : 0.0;
            for (int i = 0; i < nl; ++i) r += uh[dofs[i]] * detail::apply_strong(problem, side, s, i, x);
            sum += q.weights[qp] * std::abs(map.det()) * p.gamma_gls * hk * hk * r * r;
        }
    }
    return sum;
}

/// Row sums of the mass matrix: m_i = integral of phi_i.
inline Vector assemble_mean_functional(const FeSpace& space) {
    const Mesh& mesh = space.mesh();
    Vector m = Vector::Zero(space.ndof());
    const QuadratureRule q = make_quadrature(Entity::triangle, triangle_quadrature_degree(space.degree()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const ElementMap map(mesh, t);
        const auto dofs = space.element_dofs(t);
        for (std::size_t qp = 0; qp < q.size(); ++qp) {
            const ShapeValues s = space.eval_basis(map, q.points[qp]);
            for (int i = 0; i < space.local_dofs(); ++i) {
                m[dofs[i]] += q.weights[qp] * std::abs(map.det()) * s.value[i];
            }
        }
    }
    return m;
}

}  // namespace cipfem
