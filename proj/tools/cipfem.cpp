// Convergence-study driver.
//
//   cipfem --problem dirichlet-cd --degree 1 --levels 3..6
//   cipfem --problem cauchy-poisson --degree 2 --sweep 1e-4,1e-3,1e-2
//   cipfem --config study.cfg --format csv --out table.csv

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cipfem/cipfem.hpp"

namespace {

std::pair<int, int> parse_levels(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const int n = std::stoi(s);
            return {n, n};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--levels", "expected A..B, got '" + s + "'");
    }
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--sweep", "not a number: '" + item + "'");
        }
    }
    return out;
}

void dump_level(const cipfem::StudyConfig& cfg, const std::string& mesh_path, const std::string& matrix_dir) {
    using namespace cipfem;
    const int level = cfg.last_level();
    const Mesh mesh = build_mesh(1 << level, cfg.perturbation, cfg.seed);
    if (!mesh_path.empty()) {
        std::ofstream os(mesh_path);
        write_mesh(os, mesh);
    }
    if (!matrix_dir.empty()) {
        std::filesystem::create_directories(matrix_dir);
        const FeSpace space(mesh, cfg.degree);
        const Discretisation d = discretise(space, make_problem(cfg.problem), cfg.params());
        const std::filesystem::path dir(matrix_dir);
        auto write = [&dir](const char* name, const SparseOperator& op) {
            std::ofstream os(dir / name);
            write_coordinate(os, op);
        };
        write("A.txt", d.system.A);
        write("S_p.txt", d.system.S_p);
        write("S_a.txt", d.system.S_a);
        write("coupled.txt", d.system.coupled);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Primal-dual stabilised finite element convergence studies"};
    app.set_config("--config", "", "key=value file; keys mirror the long flag names");

    cipfem::StudyConfig cfg;
    std::string levels;
    std::string stab = "cip";
    std::string format = "md";
    std::string out;
    std::string sweep;
    std::string dump_mesh, dump_matrices;
    bool no_convective = false;

    app.add_option("--problem", cfg.problem, "dirichlet-cd, neumann-cd, cauchy-poisson, cauchy-cd-case1, cauchy-cd-case2")
        ->capture_default_str();
    app.add_option("--degree", cfg.degree, "polynomial degree (1 or 2)")->capture_default_str();
    app.add_option("--levels", levels, "level range A..B; mesh n = 2^N per side (default 3..6, 3..5 for k = 2)");
    app.add_option("--gamma1", cfg.gamma1, "gradient jump multiplier");
    app.add_option("--gamma2", cfg.gamma2, "Laplacian jump multiplier (k = 2)");
    app.add_option("--gamma-gls", cfg.gamma_gls, "least-squares residual multiplier");
    app.add_option("--gamma-bc", cfg.gamma_bc, "boundary penalty multiplier");
    app.add_option("--stab", stab, "cip, gls or cip+gls")->capture_default_str();
    app.add_flag("--no-convective-bc", no_convective, "drop the |beta.n| trace term from the Dirichlet penalty");
    app.add_option("--perturb", cfg.perturbation, "interior vertex perturbation, fraction of h")->capture_default_str();
    app.add_option("--seed", cfg.seed, "perturbation seed")->capture_default_str();
    app.add_option("--tol", cfg.tolerance, "relative residual tolerance")->capture_default_str();
    app.add_option("--format", format, "md or csv")->check(CLI::IsMember({"md", "csv"}))->capture_default_str();
    app.add_option("--out", out, "output file (default stdout)");
    app.add_option("--sweep", sweep, "comma-separated multipliers for gamma1 = gamma2; writes CSV");
    app.add_option("--sweep-level", cfg.sweep_level, "level of the sweep mesh")->capture_default_str();
    app.add_option("--dump-mesh", dump_mesh, "write the finest mesh to this file");
    app.add_option("--dump-matrices", dump_matrices, "write the finest-level operators into this directory");

    try {
        app.parse(argc, argv);
        if (!levels.empty()) std::tie(cfg.level_min, cfg.level_max) = parse_levels(levels);
        cfg.mode = cipfem::parse_stabilisation_mode(stab);
        cfg.convective_bc_term = !no_convective;
        cipfem::make_problem(cfg.problem);
        cfg.validate();
        cfg.params();
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::invalid_argument& e) {
        std::cerr << "cipfem: " << e.what() << '\n';
        return 2;
    }

    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) {
            std::cerr << "cipfem: cannot open " << out << '\n';
            return 2;
        }
    }
    std::ostream& os = out.empty() ? std::cout : file;

    bool failed = false;
    if (app.count("--sweep") > 0) {
        const auto rows = cipfem::run_parameter_sweep(cfg, parse_list(sweep));
        cipfem::render_sweep_csv(os, rows);
        for (const auto& r : rows) {
            if (!r.ok) {
                std::cerr << "multiplier " << r.multiplier << ": " << r.message << '\n';
                failed = true;
            }
        }
    } else {
        const auto report = cipfem::run_study(cfg);
        if (format == "csv") {
            cipfem::render_csv(os, report);
        } else {
            cipfem::render_markdown(os, report);
        }
        for (const auto& l : report.levels) {
            if (!l.ok) std::cerr << "level " << l.level << ": " << l.message << '\n';
        }
        failed = !report.all_ok();
    }
    if (!dump_mesh.empty() || !dump_matrices.empty()) dump_level(cfg, dump_mesh, dump_matrices);
    return failed ? 1 : 0;
}
