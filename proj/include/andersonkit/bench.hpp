/// @file bench.hpp
/// @brief Benchmark harness over a directory of Matrix Market systems and
///        performance-profile computation over the recorded times.

#ifndef ANDERSONKIT_BENCH_HPP
#define ANDERSONKIT_BENCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "andersonkit/gmres.hpp"
#include "andersonkit/matrix_market.hpp"
#include "andersonkit/precond.hpp"
#include "andersonkit/solvers.hpp"
#include "andersonkit/trace.hpp"

namespace ank {

/// Ratio assigned to a solver that fails a problem.
inline constexpr double kFailureRatio = 10000.0;

struct BenchRecord {
    std::string problem_name;
    std::string solver_name;
    double wall_time_s = 0.0;  // solve only
    double total_time_s = 0.0; // including preconditioner setup share
    bool converged = false;
    std::size_t iterations = 0;
    double final_relative_residual = 0.0;
    double ls_time_s = 0.0;     // cumulative least-squares time inside the solve
    std::size_t ls_entries = 0; // cumulative rows*cols fed to those solves
};

struct ProfileCurve {
    std::string solver_name;
    std::vector<std::pair<double, double>> points; // (tau, fraction)
};

/// r_{p,s} = t_{p,s} / min_s t_{p,s} over converged runs; failures get the
/// fixed maximal ratio. Rows (problems) with no success at all carry the
/// maximal ratio in every column.
inline std::map<std::string, std::map<std::string, double>> performance_ratios(
    const std::vector<BenchRecord>& records) {
    std::map<std::string, std::map<std::string, double>> by_problem;
    for (const BenchRecord& r : records) {
        auto& row = by_problem[r.problem_name];
        if (row.count(r.solver_name))
            throw std::invalid_argument("performance_ratios: duplicate (problem, solver) pair");
        row[r.solver_name] = r.converged ? r.wall_time_s : -1.0;
    }
    for (auto& [problem, row] : by_problem) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [solver, t] : row)
            if (t >= 0.0) best = std::min(best, t);
        for (auto& [solver, t] : row) {
            if (t < 0.0 || !std::isfinite(best) || best <= 0.0)
                t = kFailureRatio;
            else
                t = std::min(t / best, kFailureRatio);
        }
    }
    return by_problem;
}

/// fraction(tau) = |{p : log2(r_{p,s}) <= tau}| / n_p for each solver.
inline std::vector<ProfileCurve> profile_curves(
    const std::map<std::string, std::map<std::string, double>>& ratios,
    const std::vector<double>& tau_grid) {
    if (tau_grid.empty()) throw std::invalid_argument("profile_curves: empty tau grid");
    if (tau_grid.front() > 0.0 || tau_grid.back() < std::log2(kFailureRatio))
        throw std::invalid_argument("profile_curves: tau grid must cover [0, log2(r_M)]");

    std::map<std::string, std::vector<double>> log_ratios;
    std::size_t n_problems = 0;
    for (const auto& [problem, row] : ratios) {
        ++n_problems;
        for (const auto& [solver, r] : row) log_ratios[solver].push_back(std::log2(r));
    }

    std::vector<ProfileCurve> curves;
    for (auto& [solver, values] : log_ratios) {
        std::sort(values.begin(), values.end());
        ProfileCurve curve;
        curve.solver_name = solver;
        for (const double tau : tau_grid) {
            const auto it = std::upper_bound(values.begin(), values.end(), tau);
            const double fraction = n_problems == 0
                                        ? 0.0
                                        : static_cast<double>(it - values.begin()) /
                                              static_cast<double>(n_problems);
            curve.points.push_back({tau, fraction});
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

/// One benchmark problem: a Matrix Market file plus which stabilizing
/// transforms its factorization needs.
struct ManifestEntry {
    std::string name;
    bool rcm = false;
    bool diag_scale = false;
};

/// Plain-text manifest: one `name rcm diagscale` line per problem, values
/// yes/no, `#` comments allowed.
inline std::vector<ManifestEntry> parse_manifest(std::istream& in) {
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    const auto parse_flag = [&](const std::string& s) {
        if (s == "yes") return true;
        if (s == "no") return false;
        throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                 ": expected yes/no, got '" + s + "'");
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        ManifestEntry e;
        std::string rcm_s, scale_s;
        if (!(ls >> e.name)) continue; // blank line
        if (!(ls >> rcm_s >> scale_s))
            throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                     ": expected 'name rcm diagscale'");
        e.rcm = parse_flag(rcm_s);
        e.diag_scale = parse_flag(scale_s);
        entries.push_back(std::move(e));
    }
    return entries;
}

enum class BenchSolver { gmres, aa, alternating_aa, subselected, randomized };

inline const char* to_string(BenchSolver s) {
    switch (s) {
        case BenchSolver::gmres: return "gmres";
        case BenchSolver::aa: return "aa";
        case BenchSolver::alternating_aa: return "alternating_aa";
        case BenchSolver::subselected: return "subselected";
        case BenchSolver::randomized: return "randomized";
    }
    return "unknown";
}

struct BenchOptions {
    PrecondKind precond = PrecondKind::ilut;
    double tau = 1e-4;
    double omega = 0.2;
    std::size_t p = 3;
    std::size_t m = 20;
    double tol = 1e-8;
    std::size_t restart = 50;
    std::size_t max_iter = 0; // 0 = auto (10 n)
    double epsilon = 1e-8;    // reduced-variant bound target
    double batch_fraction = 0.1;
};

/// Runs every solver on one already-parsed system. setup_time_s is the
/// preconditioner build time to fold into total_time_s.
inline std::vector<BenchRecord> bench_single_system(
    const std::string& name, const SparseMatrix& a, const Vector& b,
    const Preconditioner* precond, double setup_time_s,
    const std::vector<BenchSolver>& solvers, const BenchOptions& opt, std::uint64_t seed) {
    std::vector<BenchRecord> records;
    const std::size_t n = a.n_rows;
    const std::size_t max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * n;

    for (const BenchSolver solver : solvers) {
        BenchRecord rec;
        rec.problem_name = name;
        rec.solver_name = to_string(solver);
        IterationTrace trace;
        if (solver == BenchSolver::gmres) {
            SolveResult res = gmres_solve(a, b, precond, opt.restart, opt.tol, max_iter);
            trace = std::move(res.trace);
        } else {
            SolveConfig cfg;
            cfg.omega = opt.omega;
            cfg.p = opt.p;
            cfg.m = opt.m;
            cfg.tol = opt.tol;
            cfg.max_iter = max_iter;
            ProjectionPlan plan;
            AdaptiveController ctrl;
            const ProjectionPlan* plan_ptr = nullptr;
            const AdaptiveController* ctrl_ptr = nullptr;
            switch (solver) {
                case BenchSolver::aa: cfg.mode = SolveMode::aa; break;
                case BenchSolver::alternating_aa: cfg.mode = SolveMode::alternating_aa; break;
                case BenchSolver::subselected:
                case BenchSolver::randomized: {
                    cfg.mode = SolveMode::reduced_alternating_aa;
                    plan = default_plan(n,
                                        solver == BenchSolver::subselected
                                            ? ProjectionStrategy::subselect
                                            : ProjectionStrategy::randomized,
                                        opt.batch_fraction, split_seed(seed, "bench/rows"));
                    ctrl.epsilon = opt.epsilon;
                    ctrl.k_star = std::min(max_iter, n);
                    plan_ptr = &plan;
                    ctrl_ptr = &ctrl;
                    break;
                }
                default: break;
            }
            SolveResult res = aar_solve_linear(a, b, precond, cfg, plan_ptr, ctrl_ptr, seed);
            trace = std::move(res.trace);
        }
        rec.wall_time_s = trace.solve_time_s;
        rec.total_time_s = trace.solve_time_s + setup_time_s;
        rec.converged = trace.status == SolveStatus::converged;
        rec.iterations = trace.iterations;
        rec.final_relative_residual = trace.final_relative_residual;
        rec.ls_time_s = trace.ls_time_s;
        rec.ls_entries = trace.ls_entries;
        records.push_back(std::move(rec));
    }
    return records;
}

/// Runs the manifest problems found in matrix_dir (files named
/// <name>.mtx). The right-hand side is A times the ones vector, so every
/// system has a known solution. Preconditioner breakdown marks all of a
/// problem's records non-converged and the run continues.
inline std::vector<BenchRecord> run_benchmark(const std::filesystem::path& matrix_dir,
                                              const std::vector<ManifestEntry>& manifest,
                                              const std::vector<BenchSolver>& solvers,
                                              const BenchOptions& opt, std::uint64_t seed,
                                              std::ostream* log = nullptr) {
    if (manifest.empty()) throw std::invalid_argument("run_benchmark: empty manifest");
    std::vector<BenchRecord> records;
    for (const ManifestEntry& entry : manifest) {
        const std::filesystem::path path = matrix_dir / (entry.name + ".mtx");
        std::ifstream in(path);
        if (!in) {
            if (log) *log << "skipping " << entry.name << ": cannot open " << path << "\n";
            continue;
        }
        SparseMatrix a;
        try {
            a = parse_matrix_market(in);
        } catch (const std::exception& e) {
            if (log) *log << "skipping " << entry.name << ": " << e.what() << "\n";
            continue;
        }
        const Vector ones(a.n_cols, 1.0);
        const Vector b = matvec(a, ones);

        Preconditioner precond;
        bool have_precond = false;
        double setup_time = 0.0;
        if (opt.precond != PrecondKind::none) {
            const Timer setup_timer;
            try {
                PrecondOptions popt;
                popt.kind = opt.precond;
                popt.tau = opt.tau;
                popt.rcm = entry.rcm;
                popt.diag_scale = entry.diag_scale;
                precond = make_preconditioner(a, popt);
                have_precond = true;
            } catch (const PrecondError& e) {
                if (log) *log << entry.name << ": preconditioner failed: " << e.what() << "\n";
                for (const BenchSolver solver : solvers) {
                    BenchRecord rec;
                    rec.problem_name = entry.name;
                    rec.solver_name = to_string(solver);
                    rec.converged = false;
                    records.push_back(std::move(rec));
                }
                continue;
            }
            setup_time = setup_timer.seconds();
        }

        auto rows = bench_single_system(entry.name, a, b,
                                        have_precond ? &precond : nullptr, setup_time,
                                        solvers, opt, seed);
        records.insert(records.end(), std::make_move_iterator(rows.begin()),
                       std::make_move_iterator(rows.end()));
    }
    return records;
}

inline void write_records_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                              const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) out << "# " << line << "\n";
    out << "problem,solver,wall_time_s,total_time_s,converged,iterations,"
           "final_relative_residual,ls_time_s\n";
    for (const BenchRecord& r : records)
        out << r.problem_name << ',' << r.solver_name << ',' << format_double(r.wall_time_s)
            << ',' << format_double(r.total_time_s) << ',' << (r.converged ? 1 : 0) << ','
            << r.iterations << ',' << format_double(r.final_relative_residual) << ','
            << format_double(r.ls_time_s) << "\n";
}

inline void write_profiles_csv(std::ostream& out, const std::vector<ProfileCurve>& curves,
                               const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) out << "# " << line << "\n";
    out << "solver,tau,fraction\n";
    for (const ProfileCurve& c : curves)
        for (const auto& [tau, fraction] : c.points)
            out << c.solver_name << ',' << format_double(tau) << ',' << format_double(fraction)
                << "\n";
}

} // namespace ank

#endif // ANDERSONKIT_BENCH_HPP
