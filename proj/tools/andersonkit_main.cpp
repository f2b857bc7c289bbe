// andersonkit: fixed-point acceleration toolkit front end.
//
// Subcommands:
//   solve      one solver on one Matrix Market system, trace CSV out
//   perturb    noise-injection study on the diagonal test system
//   bench      solver comparison over a matrix directory + manifest
//   boltzmann  implicit collision-stage suite on the synthetic testbed
//
// Exit codes: 0 success/converged, 1 input or usage error, 2 solver did
// not converge.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "andersonkit/bench.hpp"
#include "andersonkit/boltzmann.hpp"
#include "andersonkit/gmres.hpp"
#include "andersonkit/matrix_market.hpp"
#include "andersonkit/perturb.hpp"
#include "andersonkit/precond.hpp"
#include "andersonkit/solvers.hpp"
#include "andersonkit/trace.hpp"

namespace fs = std::filesystem;
using namespace ank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

struct CommonFlags {
    double omega = 1.0;
    std::size_t p = 1;
    std::size_t m = 5;
    double tol = 1e-8;
    std::size_t max_iter = 1000;
    std::string mode = "aa";
    std::string projection = "none";
    double batch_frac = 0.1;
    double gamma0 = 1.0;
    double gamma_shrink = 0.5;
    double epsilon = 1e-8;
    std::size_t k_star = 0; // 0 = auto: min(max_iter, n)
    std::string precond = "none";
    double tau = 1e-4;
    std::size_t restart = 50;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out;
};

void add_solver_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--omega", f.omega, "relaxation weight");
    cmd->add_option("--p", f.p, "relaxation sweeps per Anderson step");
    cmd->add_option("--m", f.m, "history length");
    cmd->add_option("--tol", f.tol, "relative residual threshold");
    cmd->add_option("--max-iter", f.max_iter, "iteration budget (0 = 10n)");
    cmd->add_option("--mode", f.mode, "picard|aa|alternating_aa|reduced_alternating_aa")
        ->check(CLI::IsMember({"picard", "aa", "alternating_aa", "reduced_alternating_aa"}));
    cmd->add_option("--projection", f.projection, "none|subselect|randomized")
        ->check(CLI::IsMember({"none", "subselect", "randomized"}));
    cmd->add_option("--batch-frac", f.batch_frac, "row batch fraction in (0,1]");
    cmd->add_option("--gamma0", f.gamma0, "initial heuristic scale");
    cmd->add_option("--gamma-shrink", f.gamma_shrink, "scale shrink factor in (0,1)");
    cmd->add_option("--epsilon", f.epsilon, "accuracy-bound target");
    cmd->add_option("--k-star", f.k_star, "bound horizon (0 = min(max-iter, n))");
    cmd->add_option("--precond", f.precond, "none|ilu0|ilut")
        ->check(CLI::IsMember({"none", "ilu0", "ilut"}));
    cmd->add_option("--tau", f.tau, "ILUT drop threshold");
    cmd->add_option("--restart", f.restart, "GMRES restart length");
    cmd->add_option("--seed", f.seed, "master random seed");
    cmd->add_option("--jobs", f.jobs, "worker threads for independent runs");
    cmd->add_option("--out", f.out, "output CSV path");
    static std::string config_help_sink;
    cmd->add_option("--config", config_help_sink,
                    "key=value config file (explicit flags win)");
}

/// Expands `--config FILE` into ordinary long options appended to the
/// argument list. Keys already given on the command line are skipped, so
/// explicit flags always win over config values.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + config_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const std::size_t last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::runtime_error("config file line " + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string flag = "--" + key;
        bool already_given = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) already_given = true;
        if (!already_given) args.push_back(flag + "=" + line.substr(eq + 1));
    }
    return args;
}

SolveMode parse_mode(const std::string& mode) {
    if (mode == "picard") return SolveMode::picard;
    if (mode == "aa") return SolveMode::aa;
    if (mode == "alternating_aa") return SolveMode::alternating_aa;
    return SolveMode::reduced_alternating_aa;
}

ProjectionStrategy parse_projection(const std::string& s) {
    if (s == "subselect") return ProjectionStrategy::subselect;
    if (s == "randomized") return ProjectionStrategy::randomized;
    return ProjectionStrategy::none;
}

PrecondKind parse_precond(const std::string& s) {
    if (s == "ilu0") return PrecondKind::ilu0;
    if (s == "ilut") return PrecondKind::ilut;
    return PrecondKind::none;
}

std::vector<std::string> config_echo(const CommonFlags& f, std::size_t n) {
    const std::size_t effective_max_iter = f.max_iter > 0 ? f.max_iter : 10 * n;
    std::vector<std::string> lines;
    std::ostringstream os;
    os << "mode=" << f.mode << " omega=" << f.omega << " p=" << f.p << " m=" << f.m
       << " tol=" << f.tol << " max_iter=";
    if (effective_max_iter > 0)
        os << effective_max_iter;
    else
        os << "auto(10n)";
    lines.push_back(os.str());
    std::ostringstream os2;
    os2 << "projection=" << f.projection << " batch_frac=" << f.batch_frac
        << " gamma0=" << f.gamma0 << " gamma_shrink=" << f.gamma_shrink
        << " epsilon=" << f.epsilon
        << " k_star=" << (f.k_star > 0 ? f.k_star : std::min(effective_max_iter, n));
    lines.push_back(os2.str());
    std::ostringstream os3;
    os3 << "precond=" << f.precond << " tau=" << f.tau << " restart=" << f.restart
        << " seed=" << f.seed;
    lines.push_back(os3.str());
    return lines;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const std::string& matrix_path, const CommonFlags& f) {
    std::ifstream in(matrix_path);
    if (!in) {
        std::cerr << "error: cannot open matrix file: " << matrix_path << "\n";
        return kExitInputError;
    }
    const SparseMatrix a = parse_matrix_market(in);
    if (a.n_rows != a.n_cols) {
        std::cerr << "error: matrix is not square\n";
        return kExitInputError;
    }
    const std::size_t n = a.n_rows;
    const Vector ones(n, 1.0);
    const Vector b = matvec(a, ones);

    Preconditioner precond;
    const PrecondKind kind = parse_precond(f.precond);
    bool have_precond = false;
    if (kind != PrecondKind::none) {
        PrecondOptions popt;
        popt.kind = kind;
        popt.tau = f.tau;
        precond = make_preconditioner(a, popt);
        have_precond = true;
    }

    SolveConfig cfg;
    cfg.omega = f.omega;
    cfg.p = f.p;
    cfg.m = f.m;
    cfg.tol = f.tol;
    cfg.max_iter = f.max_iter > 0 ? f.max_iter : 10 * n;
    cfg.mode = parse_mode(f.mode);

    ProjectionPlan plan;
    AdaptiveController ctrl;
    const ProjectionPlan* plan_ptr = nullptr;
    const AdaptiveController* ctrl_ptr = nullptr;
    if (cfg.mode == SolveMode::reduced_alternating_aa) {
        const ProjectionStrategy strategy = parse_projection(
            f.projection == "none" ? "randomized" : f.projection);
        plan = default_plan(n, strategy, f.batch_frac, split_seed(f.seed, "cli/rows"));
        ctrl.gamma = f.gamma0;
        ctrl.gamma_shrink = f.gamma_shrink;
        ctrl.epsilon = f.epsilon;
        ctrl.k_star = f.k_star > 0 ? f.k_star : std::min(cfg.max_iter, n);
        plan_ptr = &plan;
        ctrl_ptr = &ctrl;
    }

    const SolveResult res =
        aar_solve_linear(a, b, have_precond ? &precond : nullptr, cfg, plan_ptr, ctrl_ptr,
                         f.seed);

    if (!f.out.empty()) {
        std::ofstream out = open_output(f.out);
        write_trace_csv(out, res.trace, config_echo(f, n));
    }
    std::cout << "status=" << to_string(res.trace.status)
              << " iterations=" << res.trace.iterations << " final_relative_residual="
              << format_double(res.trace.final_relative_residual) << "\n";
    return res.trace.status == SolveStatus::converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

int cmd_perturb(std::vector<double> eps_values, const CommonFlags& f, std::size_t k_star) {
    SolveConfig cfg;
    cfg.omega = f.omega;
    cfg.p = f.p;
    cfg.m = f.m;
    cfg.tol = f.tol;
    cfg.max_iter = f.max_iter;
    cfg.mode = cfg.p == 1 ? SolveMode::aa : SolveMode::alternating_aa;

    const BackwardErrorReport report = run_noise_sweep(eps_values, cfg, f.seed, k_star);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!f.out.empty()) {
        file = open_output(f.out);
        out = &file;
    }
    for (const std::string& line : config_echo(f, 100)) *out << "# " << line << "\n";
    *out << "epsilon,iteration,residual_norm,epsilon_k,delta_k,sigma_min\n";
    for (const SweepEntry& entry : report.entries) {
        std::size_t step_idx = 0;
        for (std::size_t k = 0; k < entry.residual_history.size(); ++k) {
            double eps_k = 0.0, delta = 0.0, sigma = 0.0;
            if (step_idx < entry.steps.size() && entry.steps[step_idx].iteration == k) {
                eps_k = entry.steps[step_idx].epsilon_k;
                delta = entry.steps[step_idx].delta_k;
                sigma = entry.steps[step_idx].sigma_min_tk;
                ++step_idx;
            }
            *out << format_double(entry.epsilon) << ',' << k << ','
                 << format_double(entry.residual_history[k]) << ',' << format_double(eps_k)
                 << ',' << format_double(delta) << ',' << format_double(sigma) << "\n";
        }
    }

    for (const SweepEntry& entry : report.entries)
        if (!entry.converged) {
            std::cerr << "sweep entry epsilon=" << entry.epsilon << " did not converge\n";
            return kExitNotConverged;
        }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const std::string& matrix_dir, const std::string& manifest_path,
              const std::vector<std::string>& solver_names, const CommonFlags& f,
              const std::string& profiles_path) {
    if (matrix_dir.empty() || !fs::is_directory(matrix_dir)) {
        std::cerr << "error: matrix directory not found: " << matrix_dir << "\n";
        return kExitInputError;
    }

    std::vector<ManifestEntry> manifest;
    fs::path manifest_file = manifest_path.empty()
                                 ? fs::path(matrix_dir) / "manifest.txt"
                                 : fs::path(manifest_path);
    if (fs::exists(manifest_file)) {
        std::ifstream in(manifest_file);
        manifest = parse_manifest(in);
    } else {
        for (const auto& entry : fs::directory_iterator(matrix_dir))
            if (entry.path().extension() == ".mtx")
                manifest.push_back({entry.path().stem().string(), false, false});
        std::sort(manifest.begin(), manifest.end(),
                  [](const ManifestEntry& a, const ManifestEntry& b) { return a.name < b.name; });
    }
    if (manifest.empty()) {
        std::cerr << "error: no matrices to run (empty manifest/directory)\n";
        return kExitInputError;
    }

    std::vector<BenchSolver> solvers;
    for (const std::string& name : solver_names) {
        if (name == "gmres") solvers.push_back(BenchSolver::gmres);
        else if (name == "aa") solvers.push_back(BenchSolver::aa);
        else if (name == "alternating_aa") solvers.push_back(BenchSolver::alternating_aa);
        else if (name == "subselected") solvers.push_back(BenchSolver::subselected);
        else if (name == "randomized") solvers.push_back(BenchSolver::randomized);
        else {
            std::cerr << "error: unknown solver '" << name << "'\n";
            return kExitInputError;
        }
    }

    BenchOptions opt;
    opt.precond = parse_precond(f.precond);
    opt.tau = f.tau;
    opt.omega = f.omega;
    opt.p = f.p;
    opt.m = f.m;
    opt.tol = f.tol;
    opt.restart = f.restart;
    opt.max_iter = f.max_iter;
    opt.epsilon = f.epsilon;
    opt.batch_fraction = f.batch_frac;

    const auto records = run_benchmark(matrix_dir, manifest, solvers, opt, f.seed, &std::cerr);
    if (records.empty()) {
        std::cerr << "error: no runnable matrices found in " << matrix_dir << "\n";
        return kExitInputError;
    }

    std::vector<std::string> header = config_echo(f, 0);
    if (f.jobs > 1) header.push_back("jobs>1: timings taken under concurrency, treat as noisy");
    {
        std::ostream* out = &std::cout;
        std::ofstream file;
        if (!f.out.empty()) {
            file = open_output(f.out);
            out = &file;
        }
        write_records_csv(*out, records, header);
    }
    if (!profiles_path.empty()) {
        std::vector<double> tau_grid;
        const double top = std::log2(kFailureRatio);
        for (int i = 0; i <= 200; ++i) tau_grid.push_back(top * i / 200.0);
        const auto curves = profile_curves(performance_ratios(records), tau_grid);
        std::ofstream out = open_output(profiles_path);
        write_profiles_csv(out, curves, header);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// boltzmann
// ---------------------------------------------------------------------------

int cmd_boltzmann(const std::vector<double>& densities,
                  const std::vector<std::string>& solver_names, std::size_t repeats,
                  const CommonFlags& f) {
    std::vector<BoltzmannSolver> solvers;
    for (const std::string& name : solver_names) {
        if (name == "picard") solvers.push_back(BoltzmannSolver::picard);
        else if (name == "aa") solvers.push_back(BoltzmannSolver::aa);
        else if (name == "alternating_aa") solvers.push_back(BoltzmannSolver::alternating_aa);
        else if (name == "subselected") solvers.push_back(BoltzmannSolver::subselected);
        else if (name == "randomized") solvers.push_back(BoltzmannSolver::randomized);
        else {
            std::cerr << "error: unknown solver '" << name << "'\n";
            return kExitInputError;
        }
    }

    BoltzmannSuiteOptions opt;
    opt.m = f.m;
    opt.p = f.p;
    opt.omega = f.omega;
    opt.tol = f.tol;
    opt.max_iter = f.max_iter;
    opt.epsilon = f.epsilon;
    opt.batch_fraction = f.batch_frac;
    opt.repeats = repeats;

    const auto cells = run_boltzmann_suite(densities, solvers, opt, f.seed);

    std::vector<std::string> header = config_echo(f, opt.n_angles * opt.n_energies);
    if (repeats <= 1) header.push_back("repeats=1: single-run timings, treat as noisy");
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!f.out.empty()) {
        file = open_output(f.out);
        out = &file;
    }
    write_boltzmann_csv(*out, cells, header);

    for (const BoltzmannCell& cell : cells)
        if (!cell.converged) return kExitNotConverged;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anderson acceleration toolkit: fixed-point solvers with "
                 "adaptive reduced least-squares"};
    app.require_subcommand(1);

    std::vector<std::string> raw_args(argv + 1, argv + argc);
    std::vector<std::string> args;
    try {
        args = expand_config(std::move(raw_args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    std::vector<char*> argv2;
    const std::string prog = argv[0];
    argv2.push_back(const_cast<char*>(prog.c_str()));
    for (std::string& a : args) argv2.push_back(a.data());

    // solve
    CommonFlags solve_flags;
    solve_flags.mode = "alternating_aa";
    solve_flags.omega = 0.2;
    solve_flags.p = 3;
    solve_flags.m = 20;
    solve_flags.max_iter = 0; // auto 10n
    std::string matrix_path;
    CLI::App* solve = app.add_subcommand("solve", "run one solver on one system");
    solve->add_option("matrix", matrix_path, "Matrix Market file")->required();
    add_solver_flags(solve, solve_flags);

    // perturb
    CommonFlags perturb_flags;
    perturb_flags.omega = 0.02;
    perturb_flags.p = 1;
    perturb_flags.m = 20;
    perturb_flags.max_iter = 500;
    std::vector<double> eps_values;
    std::size_t k_star_perturb = 100;
    CLI::App* perturb = app.add_subcommand("perturb", "noise-injection study");
    perturb->add_option("--eps", eps_values, "noise magnitudes (0 = baseline only)");
    perturb->add_option("--k-star-schedule", k_star_perturb, "schedule horizon");
    add_solver_flags(perturb, perturb_flags);

    // bench
    CommonFlags bench_flags;
    bench_flags.omega = 0.2;
    bench_flags.p = 3;
    bench_flags.m = 20;
    bench_flags.max_iter = 0;
    bench_flags.precond = "ilut";
    std::string matrix_dir;
    std::string manifest_path;
    std::string profiles_path;
    std::vector<std::string> bench_solvers = {"gmres", "alternating_aa", "subselected",
                                              "randomized"};
    CLI::App* bench = app.add_subcommand("bench", "benchmark a matrix directory");
    bench->add_option("matrix_dir", matrix_dir, "directory of .mtx files")
        ->envname("ANDERSONKIT_MATRIX_DIR");
    bench->add_option("--manifest", manifest_path, "manifest file (name rcm diagscale)");
    bench->add_option("--solvers", bench_solvers, "solvers to run")->delimiter(',');
    bench->add_option("--profiles-out", profiles_path, "performance profile CSV path");
    add_solver_flags(bench, bench_flags);

    // boltzmann
    CommonFlags boltz_flags;
    boltz_flags.omega = 1.0;
    boltz_flags.p = 3;
    boltz_flags.m = 3;
    boltz_flags.tol = 1e-10;
    boltz_flags.max_iter = 20000;
    std::vector<double> densities = {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    std::vector<std::string> boltz_solvers = {"picard", "aa", "alternating_aa", "subselected",
                                              "randomized"};
    std::size_t repeats = 30;
    CLI::App* boltz = app.add_subcommand("boltzmann", "implicit collision-stage suite");
    boltz->add_option("--densities", densities, "matter densities (stiffness)")->delimiter(',');
    boltz->add_option("--solvers", boltz_solvers, "solvers to run")->delimiter(',');
    boltz->add_option("--repeats", repeats, "timing repeats per cell");
    add_solver_flags(boltz, boltz_flags);

    try {
        app.parse(static_cast<int>(argv2.size()), argv2.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (solve->parsed()) return cmd_solve(matrix_path, solve_flags);
        if (perturb->parsed()) {
            if (eps_values.empty()) eps_values = {0.0, 1e-8, 1e-6, 1e-4, 1.0};
            else if (eps_values.size() == 1 && eps_values[0] == 0.0) eps_values = {0.0};
            else {
                // requested magnitudes plus the baseline for comparison
                std::vector<double> with_baseline = {0.0};
                for (const double e : eps_values)
                    if (e != 0.0) with_baseline.push_back(e);
                eps_values = std::move(with_baseline);
            }
            return cmd_perturb(eps_values, perturb_flags, k_star_perturb);
        }
        if (bench->parsed())
            return cmd_bench(matrix_dir, manifest_path, bench_solvers, bench_flags,
                             profiles_path);
        if (boltz->parsed()) return cmd_boltzmann(densities, boltz_solvers, repeats, boltz_flags);
    } catch (const MatrixMarketError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
