#include <gtest/gtest.h>

#include <string>

#include "cipfem/cipfem.hpp"
#include "oracle/dense_oracle.hpp"

using namespace cipfem;

namespace {

double max_diff(const SparseOperator& a, const Eigen::MatrixXd& b) { return (a.to_dense() - b).cwiseAbs().maxCoeff(); }
double max_diff(const Vector& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

struct Case {
    std::string problem;
    int degree;
    StabilisationMode mode;
};

std::string case_name(const testing::TestParamInfo<Case>& info) {
    std::string s = info.param.problem + "_k" + std::to_string(info.param.degree) + "_" +
                    std::string(to_string(info.param.mode));
    for (char& c : s) {
        if (c == '-' || c == '+') c = '_';
    }
    return s;
}

class OracleEquivalence : public testing::TestWithParam<Case> {};

TEST_P(OracleEquivalence, OperatorsAndSolveMatchDenseReference) {
    const Case c = GetParam();
    const ProblemSpec pb = make_problem(c.problem);
    StabilisationParams prm = default_params(c.degree);
    prm.mode = c.mode;
    if (c.mode != StabilisationMode::cip) prm.gamma_gls = 0.05;
    prm.gamma2 = 0.02;

    const Mesh mesh = build_mesh(2, 0.15, 3);
    const FeSpace space(mesh, c.degree);
    const oracle::DenseSystem ref = oracle::assemble(space, pb, prm);

    constexpr double tol = 1e-9;
    EXPECT_LT(max_diff(assemble_a(space, pb), ref.A), tol);
    EXPECT_LT(max_diff(assemble_scip(space, prm, pb), ref.Scip), tol);
    EXPECT_LT(max_diff(assemble_boundary_penalty(space, pb, Side::primal, prm).first, ref.Sbc_p), tol);
    EXPECT_LT(max_diff(assemble_boundary_penalty(space, pb, Side::adjoint, prm).first, ref.Sbc_a), tol);
    if (prm.effective().uses_gls()) {
        EXPECT_LT(max_diff(assemble_sgls(space, pb, prm, Side::primal).first, ref.Sgls_p), tol);
        EXPECT_LT(max_diff(assemble_sgls(space, pb, prm, Side::adjoint).first, ref.Sgls_a), tol);
    }
    EXPECT_LT(max_diff(assemble_stabilisation(space, pb, prm, Side::primal), ref.S_p), tol);
    EXPECT_LT(max_diff(assemble_stabilisation(space, pb, prm, Side::adjoint), ref.S_a), tol);
    const auto [f1, f2] = assemble_rhs(space, pb, prm);
    EXPECT_LT(max_diff(f1, ref.F1), tol);
    EXPECT_LT(max_diff(f2, ref.F2), tol);
    EXPECT_LT(max_diff(assemble_mean_functional(space), ref.mean), tol);

    const Discretisation d = discretise(space, pb, prm);
    const bool mean = pb.needs_mean_constraint;
    EXPECT_LT(max_diff(d.system.coupled, oracle::coupled(ref, mean)), tol);

    const SolveResult sol = solve(d.system);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d.system.size());
    b.head(space.ndof()) = ref.F1;
    b.segment(space.ndof(), space.ndof()) = ref.F2;
    const Eigen::VectorXd x = oracle::gauss_solve(oracle::coupled(ref, mean), b);
    EXPECT_LT(max_diff(sol.u, x.head(space.ndof())), tol);
    EXPECT_LT(max_diff(sol.z, x.segment(space.ndof(), space.ndof())), tol);
}

std::vector<Case> all_cases() {
    std::vector<Case> cases;
    for (auto name : problem_names) {
        for (int k : {1, 2}) {
            for (auto mode : {StabilisationMode::cip, StabilisationMode::gls, StabilisationMode::cip_gls}) {
                cases.push_back({std::string(name), k, mode});
            }
        }
    }
    return cases;
}

INSTANTIATE_TEST_SUITE_P(AllProblems, OracleEquivalence, testing::ValuesIn(all_cases()), case_name);

TEST(OracleEquivalence, DirichletWithoutConvectiveTraceTerm) {
    const ProblemSpec pb = make_dirichlet_cd();
    StabilisationParams prm = default_params(1);
    prm.convective_bc_term = false;
    const Mesh mesh = build_mesh(2);
    const FeSpace space(mesh, 1);
    const oracle::DenseSystem ref = oracle::assemble(space, pb, prm);
    EXPECT_LT(max_diff(assemble_boundary_penalty(space, pb, Side::primal, prm).first, ref.Sbc_p), 1e-9);
    EXPECT_LT(max_diff(assemble_boundary_penalty(space, pb, Side::adjoint, prm).first, ref.Sbc_a), 1e-9);
    EXPECT_LT(max_diff(assemble_rhs(space, pb, prm).second, ref.F2), 1e-9);
}

TEST(DenseOracle, GaussSolveHandlesPivoting) {
    Eigen::MatrixXd M(3, 3);
    M << 0, 2, 1, 1, 1, 0, 3, 0, 1;
    const Eigen::VectorXd x_true = Eigen::Vector3d(1, -2, 0.5);
    const Eigen::VectorXd x = oracle::gauss_solve(M, M * x_true);
    EXPECT_LT((x - x_true).cwiseAbs().maxCoeff(), 1e-14);
}

}  // namespace
