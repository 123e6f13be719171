#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cipfem/assembly.hpp"

using namespace cipfem;

namespace {

Vector random_vector(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

ProblemSpec without_convection(ProblemSpec p) {
    p.beta = [](const Point&) { return Point(0.0, 0.0); };
    p.div_beta = [](const Point&) { return 0.0; };
    return p;
}

// P1 stiffness by the textbook formula area * grad(lambda_i).grad(lambda_j).
Eigen::MatrixXd p1_stiffness(const Mesh& m) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_vertices());
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles()[t];
        const ElementMap map(m, t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) k(tri[i], tri[j]) += m.area(t) * map.grad_lambda(i).dot(map.grad_lambda(j));
        }
    }
    return k;
}

Eigen::MatrixXd p1_mass(const Mesh& m, const std::function<double(int)>& scale) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m.num_vertices(), m.num_vertices());
    for (int t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles()[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) k(tri[i], tri[j]) += scale(t) * m.area(t) / 12.0 * (i == j ? 2.0 : 1.0);
        }
    }
    return k;
}

TEST(AssembleA, NeumannWithoutConvectionIsStiffness) {
    const Mesh m = build_mesh(4, 0.2, 3);
    const FeSpace space(m, 1);
    const SparseOperator a = assemble_a(space, without_convection(make_neumann_cd()));
    EXPECT_LE(a.asymmetry(), 1e-12);
    EXPECT_LE((a.to_dense() - p1_stiffness(m)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssembleA, TwoTriangleLaplacianDiagonal) {
    const Mesh m = build_mesh(1);
    const FeSpace space(m, 1);
    const SparseOperator a = assemble_a(space, without_convection(make_neumann_cd()));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.coeff(i, i), 1.0, 1e-14);
}

TEST(AssembleA, CauchyPoissonAnnihilatesConstants) {
    for (int k : {1, 2}) {
        const Mesh m = build_mesh(4, 0.1, 2);
        const FeSpace space(m, k);
        const SparseOperator a = assemble_a(space, make_cauchy_poisson());
        const Vector one = Vector::Ones(space.ndof());
        EXPECT_NEAR(one.dot(a * one), 0.0, 1e-12);
    }
}

TEST(AssembleA, DirichletAdjointConsistency) {
    // a_h with beta -> -beta and c -> c + div(beta) is the transpose of a_h.
    for (int k : {1, 2}) {
        const Mesh m = build_mesh(4, 0.15, 5);
        const FeSpace space(m, k);
        const ProblemSpec p = make_dirichlet_cd();
        ProblemSpec adj = p;
        adj.beta = [b = p.beta](const Point& x) { return Point(-b(x)); };
        adj.div_beta = [d = p.div_beta](const Point& x) { return -d(x); };
        adj.c = [c = p.c, d = p.div_beta](const Point& x) { return c(x) + d(x); };
        const Eigen::MatrixXd a = assemble_a(space, p).to_dense();
        const Eigen::MatrixXd at = assemble_a(space, adj).to_dense();
        EXPECT_LE((at - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff()) << "k=" << k;
    }
}

TEST(AssembleA, RejectsUnassignedRole) {
    const Mesh m = build_mesh(2);
    const FeSpace space(m, 1);
    ProblemSpec p = make_cauchy_poisson();
    p.roles[static_cast<int>(BoundaryTag::right)] = BoundaryRole::unassigned;
    EXPECT_THROW(assemble_a(space, p), std::invalid_argument);
    EXPECT_THROW(assemble_boundary_penalty(space, p, Side::primal, p.default_params(1)), std::invalid_argument);
    EXPECT_THROW(assemble_rhs(space, p, p.default_params(1)), std::invalid_argument);
}

TEST(AssembleScip, AffineFunctionsAreInTheKernel) {
    const Mesh m = build_mesh(8, 0.2, 1);
    const FeSpace space(m, 1);
    const ProblemSpec p = make_dirichlet_cd();
    const SparseOperator s = assemble_scip(space, p.default_params(1), p);
    for (const auto& [a, b, c] : {std::tuple{1.0, 0.0, 0.0}, std::tuple{0.0, 1.0, 0.0}, std::tuple{0.3, -2.0, 5.0}}) {
        const Vector v = interpolate(space, [&](const Point& x) { return a + b * x.x() + c * x.y(); });
        // round-off of v^T S v grows with the square of the coefficients
        EXPECT_NEAR(s.quadratic_form(v), 0.0, 1e-14 * std::max(1.0, v.squaredNorm() / v.size()));
    }
}

TEST(AssembleScip, HandValueForAKinkAlongAVerticalLine) {
    // u = x left of x = 1/2 and 2x - 1/2 right of it: gradient jump of unit size on
    // the two faces of length 1/2 on that line, zero elsewhere.
    const Mesh m = build_mesh(2);
    const FeSpace space(m, 1);
    const Vector v = interpolate(space, [](const Point& x) { return x.x() <= 0.5 ? x.x() : 2 * x.x() - 0.5; });
    StabilisationParams params = default_params(1);
    params.gamma1 = 0.3;

    const ProblemSpec poisson = make_cauchy_poisson();
    EXPECT_NEAR(assemble_scip(space, params, poisson).quadratic_form(v), 0.3 * 2 * (1.0 * 0.5 * 0.5), 1e-14);

    // |beta.n| = 100 (x + y) peaks at 100 on the lower face, 150 on the upper one
    const ProblemSpec cd = make_dirichlet_cd();
    const double expected = 0.3 * 0.5 * 0.5 * ((1 + 100 * 0.5) + (1 + 150 * 0.5));
    EXPECT_NEAR(assemble_scip(space, params, cd).quadratic_form(v), expected, 1e-12);
}

TEST(AssembleScip, LaplacianJumpHasNoEffectForLinearElements) {
    const Mesh m = build_mesh(4, 0.2, 3);
    const FeSpace space(m, 1);
    const ProblemSpec p = make_dirichlet_cd();
    StabilisationParams a = default_params(1), b = default_params(1);
    b.gamma2 = 7.0;
    EXPECT_EQ((assemble_scip(space, a, p).to_dense() - assemble_scip(space, b, p).to_dense()).cwiseAbs().maxCoeff(),
              0.0);
}

TEST(AssembleSgls, ZeroForLinearLaplacian) {
    const Mesh m = build_mesh(4, 0.2, 3);
    const FeSpace space(m, 1);
    StabilisationParams params = default_params(1);
    params.mode = StabilisationMode::gls;
    params.gamma_gls = 0.2;
    const auto [op, data] = assemble_sgls(space, without_convection(make_cauchy_poisson()), params, Side::primal);
    EXPECT_EQ(op.to_dense().cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleSgls, ScaledMassForPureReaction) {
    const Mesh m = build_mesh(4, 0.2, 3);
    const FeSpace space(m, 1);
    ProblemSpec p = without_convection(make_dirichlet_cd());
    p.mu = 0.0;
    p.c = [](const Point&) { return 1.0; };
    StabilisationParams params = default_params(1);
    params.mode = StabilisationMode::cip_gls;
    params.gamma_gls = 0.2;
    const Eigen::MatrixXd expected = p1_mass(m, [&](int t) { return 0.2 * m.diameter(t) * m.diameter(t); });
    for (Side side : {Side::primal, Side::adjoint}) {
        const Eigen::MatrixXd got = assemble_sgls(space, p, params, side).first.to_dense();
        EXPECT_LE((got - expected).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(AssembleSgls, RequiresGlsMode) {
    const Mesh m = build_mesh(2);
    const FeSpace space(m, 1);
    const ProblemSpec p = make_dirichlet_cd();
    EXPECT_THROW(assemble_sgls(space, p, default_params(1), Side::primal), std::invalid_argument);
}

TEST(BoundaryPenalty, DirichletVanishesOnInteriorBubbles) {
    const Mesh m = build_mesh(4, 0.2, 3);
    for (int k : {1, 2}) {
        const FeSpace space(m, k);
        const ProblemSpec p = make_dirichlet_cd();
        Vector v = random_vector(space.ndof(), 9);
        for (int f = 0; f < m.num_faces(); ++f) {
            if (!m.faces()[f].is_boundary()) continue;
            for (int d : space.face_dofs(f)) v[d] = 0.0;
        }
        for (Side side : {Side::primal, Side::adjoint}) {
            EXPECT_NEAR(assemble_boundary_penalty(space, p, side, p.default_params(k)).first.quadratic_form(v), 0.0,
                        1e-12);
        }
    }
}

TEST(BoundaryPenalty, CauchyValuePenaltyOnConstants) {
    const int n = 8;
    const Mesh m = build_mesh(n);
    const FeSpace space(m, 1);
    const Vector one = Vector::Ones(space.ndof());
    ProblemSpec left_only = make_cauchy_poisson();
    left_only.roles = {BoundaryRole::cauchy_data, BoundaryRole::free, BoundaryRole::free, BoundaryRole::free};
    for (double gamma_bc : {0.1, 10.0, 1000.0}) {
        StabilisationParams params = default_params(1);
        params.gamma_bc = gamma_bc;
        EXPECT_NEAR(assemble_boundary_penalty(space, left_only, Side::primal, params).first.quadratic_form(one), n,
                    1e-12);
        EXPECT_NEAR(
            assemble_boundary_penalty(space, make_cauchy_poisson(), Side::primal, params).first.quadratic_form(one),
            2 * n, 1e-12);
        // the adjoint side penalises the two free sides
        EXPECT_NEAR(
            assemble_boundary_penalty(space, make_cauchy_poisson(), Side::adjoint, params).first.quadratic_form(one),
            2 * n, 1e-12);
    }
}

TEST(BoundaryPenalty, NeumannAdjointVanishesOnConstants) {
    const Mesh m = build_mesh(4, 0.2, 3);
    for (int k : {1, 2}) {
        const FeSpace space(m, k);
        const ProblemSpec p = make_neumann_cd();
        const Vector one = Vector::Ones(space.ndof());
        EXPECT_NEAR(assemble_boundary_penalty(space, p, Side::adjoint, p.default_params(k)).first.quadratic_form(one),
                    0.0, 1e-12);
    }
}

TEST(BoundaryPenalty, DataVanishesOnTheAdjointSide) {
    const Mesh m = build_mesh(4, 0.2, 3);
    const FeSpace space(m, 1);
    for (auto name : problem_names) {
        const ProblemSpec p = make_problem(name);
        EXPECT_EQ(assemble_boundary_penalty(space, p, Side::adjoint, p.default_params(1)).second.norm(), 0.0) << name;
    }
}

TEST(BoundaryPenalty, NeumannPrimalResidualVanishesOnExactAffineFlux) {
    // For an affine u, (mu grad u.n - beta.n u) is reproduced by the P1 interpolant.
    const Mesh m = build_mesh(4, 0.2, 3);
    const FeSpace space(m, 1);
    const ProblemSpec p = make_neumann_cd(ExactSolution::quadratic({0.4, 1.0, -2.0, 0, 0, 0}));
    const Vector u = interpolate(space, p.exact.value);
    EXPECT_NEAR(boundary_penalty_residual(space, p, p.default_params(1), Side::primal, u), 0.0, 1e-20);
}

class StabilisationOperators
    : public testing::TestWithParam<std::tuple<std::string_view, int, StabilisationMode>> {};

TEST_P(StabilisationOperators, SymmetricPositiveSemidefinite) {
    const auto [name, k, mode] = GetParam();
    const Mesh m = build_mesh(4, 0.2, 7);
    const FeSpace space(m, k);
    const ProblemSpec p = make_problem(name);
    StabilisationParams params = p.default_params(k);
    params.mode = mode;
    params.gamma_gls = 0.05;
    for (Side side : {Side::primal, Side::adjoint}) {
        const SparseOperator s = assemble_stabilisation(space, p, params, side);
        EXPECT_LE(s.asymmetry(), 1e-12);
        for (int i = 0; i < 100; ++i) {
            EXPECT_GE(s.quadratic_form(random_vector(space.ndof(), 100 + i)), -1e-12);
        }
    }
    const SparseOperator cip = assemble_scip(space, params, p);
    EXPECT_LE(cip.asymmetry(), 1e-12);
    EXPECT_GE(cip.quadratic_form(random_vector(space.ndof(), 5)), 0.0);
}

INSTANTIATE_TEST_SUITE_P(AllProblems, StabilisationOperators,
                         testing::Combine(testing::ValuesIn(problem_names), testing::Values(1, 2),
                                          testing::Values(StabilisationMode::cip, StabilisationMode::gls,
                                                          StabilisationMode::cip_gls)));

TEST(AssembleRhs, ZeroDataGivesZeroVectors) {
    const Mesh m = build_mesh(4, 0.2, 3);
    for (auto name : problem_names) {
        for (int k : {1, 2}) {
            const FeSpace space(m, k);
            const ProblemSpec p = make_problem(name, ExactSolution::zero());
            StabilisationParams params = p.default_params(k);
            params.mode = StabilisationMode::cip_gls;
            params.gamma_gls = 0.1;
            const auto [f1, f2] = assemble_rhs(space, p, params);
            EXPECT_EQ(f1.norm(), 0.0) << name;
            EXPECT_EQ(f2.norm(), 0.0) << name;
        }
    }
}

TEST(AssembleRhs, UnitSourceSumsToArea) {
    const Mesh m = build_mesh(5, 0.2, 3);
    const FeSpace space(m, 1);
    ProblemSpec p = make_dirichlet_cd(ExactSolution::zero());
    p.f = [](const Point&) { return 1.0; };
    EXPECT_NEAR(assemble_rhs(space, p, p.default_params(1)).first.sum(), 1.0, 1e-14);
}

TEST(AssembleRhs, CauchyPoissonPenaltyDataLivesOnDataSides) {
    for (int k : {1, 2}) {
        const Mesh m = build_mesh(4, 0.2, 3);
        const FeSpace space(m, k);
        const ProblemSpec p = make_cauchy_poisson();
        const Vector f2 = assemble_rhs(space, p, p.default_params(k)).second;
        std::vector<bool> on_data(space.ndof(), false);
        for (int f = 0; f < m.num_faces(); ++f) {
            const Face& face = m.faces()[f];
            if (!face.is_boundary() || p.role(*face.tag) != BoundaryRole::cauchy_data) continue;
            for (int d : space.element_dofs(face.triangles[0])) on_data[d] = true;
        }
        int nonzero = 0;
        for (int i = 0; i < space.ndof(); ++i) {
            if (f2[i] != 0.0) {
                ++nonzero;
                EXPECT_TRUE(on_data[i]) << "dof " << i;
            }
        }
        EXPECT_GT(nonzero, 0);
    }
}

TEST(AssembleRhs, GalerkinOrthogonalityForDiscreteExactSolution) {
    // With an exact solution in the discrete space, u_h = i_h u solves the primal row
    // A u = F1 and is invisible to the data-offset stabilisation: S_p u = -F2.
    for (auto name : problem_names) {
        for (int k : {1, 2}) {
            const Mesh m = build_mesh(3, 0.2, 4);
            const FeSpace space(m, k);
            const ExactSolution exact = k == 1 ? ExactSolution::quadratic({0.3, 1.2, -0.7, 0, 0, 0})
                                               : ExactSolution::quadratic({0.3, 1.2, -0.7, 0.5, -1.1, 0.8});
            const ProblemSpec p = make_problem(name, exact);
            StabilisationParams params = p.default_params(k);
            params.mode = k == 2 ? StabilisationMode::cip_gls : StabilisationMode::cip;
            params.gamma_gls = 0.1;
            const Vector u = interpolate(space, p.exact.value);
            const auto [f1, f2] = assemble_rhs(space, p, params);
            const Vector r1 = assemble_a(space, p) * u - f1;
            const Vector r2 = assemble_stabilisation(space, p, params, Side::primal) * u + f2;
            EXPECT_LE(r1.cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, f1.cwiseAbs().maxCoeff())) << name << k;
            EXPECT_LE(r2.cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, f2.cwiseAbs().maxCoeff())) << name << k;
        }
    }
}

TEST(MeanFunctional, SumsToArea) {
    const Mesh m = build_mesh(4, 0.2, 3);
    for (int k : {1, 2}) {
        const FeSpace space(m, k);
        EXPECT_NEAR(assemble_mean_functional(space).sum(), 1.0, 1e-14);
    }
}

}  // namespace
