#pragma once

// Coupled primal-dual block system and its sparse direct solution.
//
// Unknowns (u, z) and, with mean constraints, multipliers (l_u, l_z):
//
//   [  A    S_a  m  0 ] [ u  ]   [ F1 ]
//   [ -S_p  A^T  0  m ] [ z  ] = [ F2 ]
//   [  m^T  0    0  0 ] [ l_u]   [ 0  ]
//   [  0    m^T  0  0 ] [ l_z]   [ 0  ]
//
// with m_i the integral of phi_i.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "cipfem/assembly.hpp"
#include "cipfem/fe_space.hpp"
#include "cipfem/sparse.hpp"

namespace cipfem {

class SolverError : public std::runtime_error {
public:
    enum class Kind { singular, not_converged };

    SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct BlockSystem {
    int ndof = 0;
    SparseOperator A;
    SparseOperator S_p;
    SparseOperator S_a;
    Vector F1;
    Vector F2;
    std::optional<Vector> mean_constraint;
    SparseOperator coupled;
    Vector rhs;

    int size() const noexcept { return coupled.rows(); }
};

inline BlockSystem build_block_system(SparseOperator A, SparseOperator S_p, SparseOperator S_a, Vector F1,
                                      Vector F2, bool with_mean_constraint, const FeSpace& space) {
    const int n = A.rows();
    auto square = [n](const SparseOperator& m) { return m.rows() == n && m.cols() == n; };
    if (A.cols() != n || !square(S_p) || !square(S_a) || F1.size() != n || F2.size() != n ||
        space.ndof() != n) {
        throw std::invalid_argument("build_block_system: dimension mismatch");
    }
    BlockSystem sys;
    sys.ndof = n;
    const int extra = with_mean_constraint ? 2 : 0;
    const int size = 2 * n + extra;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(2 * (A.matrix().nonZeros() + S_p.matrix().nonZeros()) + 4 * n));
    auto put = [&t](const SparseOperator::Matrix& m, int r0, int c0, double scale, bool transposed) {
        for (int k = 0; k < m.outerSize(); ++k) {
            for (SparseOperator::Matrix::InnerIterator it(m, k); it; ++it) {
                const int r = static_cast<int>(transposed ? it.col() : it.row());
                const int c = static_cast<int>(transposed ? it.row() : it.col());
                t.emplace_back(r0 + r, c0 + c, scale * it.value());
            }
        }
    };
    put(A.matrix(), 0, 0, 1.0, false);
    put(S_a.matrix(), 0, n, 1.0, false);
    put(S_p.matrix(), n, 0, -1.0, false);
    put(A.matrix(), n, n, 1.0, true);
    if (with_mean_constraint) {
        const Vector m = assemble_mean_functional(space);
        for (int i = 0; i < n; ++i) {
            t.emplace_back(i, 2 * n, m[i]);
            t.emplace_back(n + i, 2 * n + 1, m[i]);
            t.emplace_back(2 * n, i, m[i]);
            t.emplace_back(2 * n + 1, n + i, m[i]);
        }
        sys.mean_constraint = m;
    }
    SparseOperator::Matrix M(size, size);
    M.setFromTriplets(t.begin(), t.end());
    sys.coupled = SparseOperator(std::move(M));
    sys.rhs = Vector::Zero(size);
    sys.rhs.head(n) = F1;
    sys.rhs.segment(n, n) = F2;
    sys.A = std::move(A);
    sys.S_p = std::move(S_p);
    sys.S_a = std::move(S_a);
    sys.F1 = std::move(F1);
    sys.F2 = std::move(F2);
    return sys;
}

struct SolveDiagnostics {
    double relative_residual = 0.0;  ///< ||M x - b|| / max(||b||, 1)
    double primal_residual = 0.0;    ///< first block row, same scaling
    double adjoint_residual = 0.0;   ///< second block row, same scaling
    int refinement_steps = 0;
};

struct SolveResult {
    Vector u;
    Vector z;
    Vector multipliers;
    SolveDiagnostics diagnostics;
};

namespace detail {

using SparseLUSolver = Eigen::SparseLU<SparseOperator::Matrix, Eigen::COLAMDOrdering<int>>;
using InverseFn = std::function<Vector(const Vector&)>;

inline void factorize(SparseLUSolver& lu, const SparseOperator::Matrix& m) {
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) {
        throw SolverError(SolverError::Kind::singular, "sparse LU factorisation failed: " + lu.lastErrorMessage());
    }
}

inline Vector lu_solve(const SparseLUSolver& lu, const Vector& b) {
    Vector x = lu.solve(b);
    if (!x.allFinite()) throw SolverError(SolverError::Kind::singular, "sparse LU solve produced non-finite values");
    return x;
}

inline InverseFn direct_inverse(const BlockSystem& sys) {
    auto lu = std::make_shared<SparseLUSolver>();
    factorize(*lu, sys.coupled.matrix());
    return [lu](const Vector& b) { return lu_solve(*lu, b); };
}

/// The mean-value rows are dense and ruin the fill of a direct LU. Pure-flux
/// problems leave the unbordered block K singular only through z = const
/// (left kernel u-test = const), so K + s e_0 e_n^T is nonsingular and the
/// border plus the rank-one pin reduce to a 3x3 Schur complement.
inline InverseFn bordered_inverse(const BlockSystem& sys) {
    const int n = sys.ndof;
    const int n2 = 2 * n;
    SparseOperator::Matrix K = sys.coupled.matrix().topLeftCorner(n2, n2);
    const double s = std::max(std::abs(K.coeff(0, 0)), 1.0);
    K.coeffRef(0, n) += s;
    K.makeCompressed();
    auto lu = std::make_shared<SparseLUSolver>();
    factorize(*lu, K);

    const Vector& m = *sys.mean_constraint;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n2, 2);
    B.col(0).head(n) = m;
    B.col(1).tail(n) = m;
    Vector p = Vector::Zero(n2);
    p[0] = s;
    Eigen::MatrixXd XB(n2, 2);
    XB.col(0) = lu_solve(*lu, B.col(0));
    XB.col(1) = lu_solve(*lu, B.col(1));
    const Vector xp = lu_solve(*lu, p);

    // Unknowns (lambda_u, lambda_z, mu) with mu = x[n] carrying the pin.
    Eigen::Matrix3d S;
    S.topLeftCorner<2, 2>() = -B.transpose() * XB;
    S.topRightCorner<2, 1>() = B.transpose() * xp;
    S.bottomLeftCorner<1, 2>() = -XB.row(n);
    S(2, 2) = xp[n] - 1.0;
    const Eigen::FullPivLU<Eigen::Matrix3d> schur(S);
    if (!schur.isInvertible()) throw SolverError(SolverError::Kind::singular, "bordered Schur complement is singular");

    return [=](const Vector& b) {
        const Vector xb = lu_solve(*lu, b.head(n2));
        Eigen::Vector3d r;
        r.head<2>() = b.tail<2>() - B.transpose() * xb;
        r[2] = -xb[n];
        const Eigen::Vector3d y = schur.solve(r);
        Vector x(n2 + 2);
        x.head(n2) = xb - XB * y.head<2>() + xp * y[2];
        x.tail<2>() = y.head<2>();
        return x;
    };
}

struct RefinedSolution {
    Vector x;
    Vector r;
    int steps = 0;
};

inline RefinedSolution refine(const BlockSystem& sys, const InverseFn& inverse, double tolerance, double scale) {
    constexpr int max_refinement = 5;
    RefinedSolution out;
    out.x = inverse(sys.rhs);
    out.r = sys.rhs - sys.coupled * out.x;
    while (out.r.norm() / scale > tolerance && out.steps < max_refinement) {
        out.x += inverse(out.r);
        out.r = sys.rhs - sys.coupled * out.x;
        ++out.steps;
    }
    return out;
}

}  // namespace detail

/// Sparse LU (COLAMD ordering) with iterative refinement until the relative
/// residual meets `tolerance`. Mean-constrained systems are solved by bordering
/// and fall back to a direct factorisation of the full matrix.
inline SolveResult solve(const BlockSystem& sys, double tolerance = 1e-10) {
    const Vector& b = sys.rhs;
    const double scale = std::max(b.norm(), 1.0);
    std::optional<detail::RefinedSolution> sol;
    if (sys.mean_constraint) {
        try {
            sol = detail::refine(sys, detail::bordered_inverse(sys), tolerance, scale);
            if (!(sol->r.norm() / scale <= tolerance)) sol.reset();
        } catch (const SolverError&) {
            sol.reset();
        }
    }
    if (!sol) sol = detail::refine(sys, detail::direct_inverse(sys), tolerance, scale);

    const int n = sys.ndof;
    const Vector& r = sol->r;
    SolveResult out;
    out.diagnostics.relative_residual = r.norm() / scale;
    out.diagnostics.primal_residual = r.head(n).norm() / scale;
    out.diagnostics.adjoint_residual = r.segment(n, n).norm() / scale;
    out.diagnostics.refinement_steps = sol->steps;
    if (!(out.diagnostics.relative_residual <= tolerance)) {
        throw SolverError(SolverError::Kind::not_converged,
                          "relative residual " + std::to_string(out.diagnostics.relative_residual) +
                              " above tolerance " + std::to_string(tolerance));
    }
    out.u = sol->x.head(n);
    out.z = sol->x.segment(n, n);
    out.multipliers = sol->x.tail(sys.size() - 2 * n);
    return out;
}

}  // namespace cipfem
