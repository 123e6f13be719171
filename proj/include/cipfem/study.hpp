#pragma once

// Convergence studies and parameter sweeps over mesh sequences.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cipfem/analysis.hpp"
#include "cipfem/assembly.hpp"
#include "cipfem/fe_space.hpp"
#include "cipfem/mesh.hpp"
#include "cipfem/problems.hpp"
#include "cipfem/saddle_solver.hpp"

namespace cipfem {

inline constexpr int max_study_level = 9;

struct StudyConfig {
    std::string problem = "dirichlet-cd";
    int degree = 1;
    int level_min = 3;
    int level_max = -1;  ///< -1: 6 for k = 1, 5 for k = 2
    std::optional<double> gamma1;
    std::optional<double> gamma2;
    std::optional<double> gamma_gls;
    std::optional<double> gamma_bc;
    StabilisationMode mode = StabilisationMode::cip;
    bool convective_bc_term = true;
    double perturbation = 0.1;
    std::uint64_t seed = 1;
    double tolerance = 1e-10;
    int sweep_level = 5;

    int last_level() const { return level_max >= 0 ? level_max : (degree == 1 ? 6 : 5); }

    void validate() const {
        if (degree != 1 && degree != 2) throw std::invalid_argument("degree must be 1 or 2");
        if (level_min < 0 || last_level() < level_min) throw std::invalid_argument("invalid level range");
        if (last_level() > max_study_level) throw std::invalid_argument("levels above 9 are not supported");
        if (sweep_level < 0 || sweep_level > max_study_level) throw std::invalid_argument("invalid sweep level");
        if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    }

    StabilisationParams params() const {
        StabilisationParams p = default_params(degree);
        p.mode = mode;
        if (mode != StabilisationMode::cip) p.gamma_gls = 0.01;
        if (gamma1) p.gamma1 = *gamma1;
        if (gamma2) p.gamma2 = *gamma2;
        if (gamma_gls) p.gamma_gls = *gamma_gls;
        if (gamma_bc) p.gamma_bc = *gamma_bc;
        p.convective_bc_term = convective_bc_term;
        return p.effective();
    }
};

/// Everything assembled for one mesh, plus the solve.
struct Discretisation {
    SparseOperator cip;
    BlockSystem system;
};

inline Discretisation discretise(const FeSpace& space, const ProblemSpec& problem, const StabilisationParams& params) {
    Discretisation d;
    d.cip = assemble_scip(space, params, problem);
    SparseOperator sp = assemble_stabilisation(space, problem, params, Side::primal);
    SparseOperator sa = assemble_stabilisation(space, problem, params, Side::adjoint);
    auto [f1, f2] = assemble_rhs(space, problem, params);
    d.system = build_block_system(assemble_a(space, problem), std::move(sp), std::move(sa), std::move(f1),
                                  std::move(f2), problem.needs_mean_constraint, space);
    return d;
}

struct LevelRecord {
    int level = 0;  ///< N, with n = 2^N cells per side
    int n = 0;
    double h = 0.0;
    int ndof = 0;
    double l2_error = NAN;
    double h1_error = NAN;
    double z_norm = NAN;
    double primal_seminorm = NAN;   ///< |u_h|_{S_p} against data
    double adjoint_seminorm = NAN;  ///< |z_h|_{S_a}
    double flux_error = NAN;
    double mean_u = NAN;
    double mean_z = NAN;
    SolveDiagnostics diagnostics;
    bool ok = false;
    std::string message;

    double stab_seminorm_sum() const { return primal_seminorm + adjoint_seminorm; }
};

/// Solves one mesh level and evaluates every reported quantity.
inline LevelRecord run_level(const ProblemSpec& problem, int degree, const StabilisationParams& params, int n,
                             double perturbation, std::uint64_t seed, double tolerance) {
    LevelRecord rec;
    rec.n = n;
    rec.level = static_cast<int>(std::lround(std::log2(static_cast<double>(n))));
    const Mesh mesh = build_mesh(n, perturbation, seed);
    const FeSpace space(mesh, degree);
    rec.h = mesh.h();
    rec.ndof = space.ndof();
    try {
        const Discretisation d = discretise(space, problem, params);
        const SolveResult r = solve(d.system, tolerance);
        rec.diagnostics = r.diagnostics;
        rec.l2_error = l2_error(space, r.u, problem.exact.value);
        rec.h1_error = h1_seminorm_error(space, r.u, problem.exact.grad);
        rec.z_norm = l2_norm(space, r.z);
        rec.flux_error = boundary_flux_error(space, r.u, problem.exact.grad);
        const double primal_data = boundary_penalty_residual(space, problem, params, Side::primal, r.u) +
                                   gls_residual(space, problem, params, Side::primal, r.u);
        rec.primal_seminorm = stab_seminorm(r.u, d.cip, primal_data);
        rec.adjoint_seminorm = stab_seminorm(r.z, d.system.S_a, 0.0);
        rec.mean_u = integral(space, r.u);
        rec.mean_z = integral(space, r.z);
        rec.ok = true;
    } catch (const SolverError& e) {
        rec.message = e.kind() == SolverError::Kind::singular ? "singular: " : "not converged: ";
        rec.message += e.what();
    }
    return rec;
}

struct ConvergenceReport {
    std::string problem;
    int degree = 1;
    StabilisationParams params;
    std::vector<LevelRecord> levels;

    bool all_ok() const {
        for (const auto& l : levels) {
            if (!l.ok) return false;
        }
        return true;
    }

    bool has_flux_column() const { return problem.rfind("cauchy", 0) == 0; }

    std::vector<double> column(double LevelRecord::*field) const {
        std::vector<double> v;
        for (const auto& l : levels) v.push_back(l.*field);
        return v;
    }
    std::vector<double> stab_column() const {
        std::vector<double> v;
        for (const auto& l : levels) v.push_back(l.stab_seminorm_sum());
        return v;
    }
};

inline ConvergenceReport run_study(const StudyConfig& config) {
    config.validate();
    const ProblemSpec problem = make_problem(config.problem);
    ConvergenceReport report;
    report.problem = config.problem;
    report.degree = config.degree;
    report.params = config.params();
    for (int level = config.level_min; level <= config.last_level(); ++level) {
        LevelRecord rec = run_level(problem, config.degree, report.params, 1 << level, config.perturbation,
                                    config.seed, config.tolerance);
        rec.level = level;
        report.levels.push_back(std::move(rec));
    }
    return report;
}

struct SweepRow {
    double multiplier = 0.0;
    double l2_error = NAN;
    double relative_l2_error = NAN;
    bool ok = false;
    std::string message;
};

/// One solve per multiplier, applied to gamma1 = gamma2, on the level `config.sweep_level`.
inline std::vector<SweepRow> run_parameter_sweep(const StudyConfig& config, const std::vector<double>& multipliers) {
    config.validate();
    std::vector<SweepRow> rows;
    if (multipliers.empty()) return rows;
    const ProblemSpec problem = make_problem(config.problem);
    const double exact_norm = integrate_unit_square([&](const Point& x) {
        const double v = problem.exact.value(x);
        return v * v;
    }, 16);
    for (double g : multipliers) {
        StudyConfig c = config;
        c.gamma1 = g;
        c.gamma2 = g;
        const LevelRecord rec = run_level(problem, c.degree, c.params(), 1 << c.sweep_level, c.perturbation, c.seed,
                                          c.tolerance);
        SweepRow row;
        row.multiplier = g;
        row.ok = rec.ok;
        row.message = rec.message;
        row.l2_error = rec.l2_error;
        row.relative_l2_error = rec.l2_error / std::sqrt(exact_norm);
        rows.push_back(row);
    }
    return rows;
}

// --- rendering -------------------------------------------------------------

/// Two significant digits: decimal for moderate magnitudes, "2.3E-05" otherwise.
inline std::string format_2sig(double v) {
    if (!std::isfinite(v)) return "nan";
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    const double r = std::strtod(buf, nullptr);
    const double a = std::abs(r);
    if (a >= 1e-4 && a < 1e4) {
        const int decimals = std::max(0, 1 - static_cast<int>(std::floor(std::log10(a))));
        std::snprintf(buf, sizeof buf, "%.*f", decimals, r);
    } else {
        std::snprintf(buf, sizeof buf, "%.1E", r);
    }
    return buf;
}

inline std::string format_eoc(const std::optional<double>& e) { return e ? "(" + format_2sig(*e) + ")" : "(--)"; }

inline void render_markdown(std::ostream& os, const ConvergenceReport& report) {
    const bool flux = report.has_flux_column();
    os << "| N | ||u-u_h|| | ||z_h|| | |u_h|_Sp + |z_h|_Sa |" << (flux ? " ||grad(u-u_h).n||_{-1/2,h} |" : "") << '\n';
    os << "|---|---|---|---|" << (flux ? "---|" : "") << '\n';
    const auto l2 = report.column(&LevelRecord::l2_error);
    const auto zn = report.column(&LevelRecord::z_norm);
    const auto st = report.stab_column();
    const auto fl = report.column(&LevelRecord::flux_error);
    const auto e_l2 = compute_eoc(l2);
    const auto e_zn = compute_eoc(zn);
    const auto e_st = compute_eoc(st);
    const auto e_fl = compute_eoc(fl);
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const auto& l = report.levels[i];
        os << "| " << l.level << " | ";
        if (!l.ok) {
            os << "failed: " << l.message << " |  |  |" << (flux ? "  |" : "") << '\n';
            continue;
        }
        os << format_2sig(l2[i]) << ' ' << format_eoc(e_l2[i]) << " | " << format_2sig(zn[i]) << ' '
           << format_eoc(e_zn[i]) << " | " << format_2sig(st[i]) << ' ' << format_eoc(e_st[i]) << " |";
        if (flux) os << ' ' << format_2sig(fl[i]) << ' ' << format_eoc(e_fl[i]) << " |";
        os << '\n';
    }
}

inline void render_csv(std::ostream& os, const ConvergenceReport& report) {
    os << "N,n,h,ndof,l2_error,l2_eoc,z_norm,z_eoc,stab_seminorm,stab_eoc,flux_error,flux_eoc,h1_error,h1_eoc,"
          "relative_residual,status\n";
    const auto l2 = report.column(&LevelRecord::l2_error);
    const auto zn = report.column(&LevelRecord::z_norm);
    const auto st = report.stab_column();
    const auto fl = report.column(&LevelRecord::flux_error);
    const auto h1 = report.column(&LevelRecord::h1_error);
    const auto eocs = std::vector{compute_eoc(l2), compute_eoc(zn), compute_eoc(st), compute_eoc(fl), compute_eoc(h1)};
    const std::vector<const std::vector<double>*> values{&l2, &zn, &st, &fl, &h1};
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.6e", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const auto& l = report.levels[i];
        os << l.level << ',' << l.n << ',' << num(l.h) << ',' << l.ndof;
        for (std::size_t c = 0; c < values.size(); ++c) {
            os << ',' << num((*values[c])[i]) << ',';
            if (eocs[c][i]) os << num(*eocs[c][i]);
        }
        os << ',' << num(l.diagnostics.relative_residual) << ',' << (l.ok ? "ok" : "failed") << '\n';
    }
}

inline void render_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "multiplier,l2_error,relative_l2_error,status\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6e,%.6e,%.6e,", r.multiplier, r.l2_error, r.relative_l2_error);
        os << buf << (r.ok ? "ok" : "failed") << '\n';
    }
}

}  // namespace cipfem
