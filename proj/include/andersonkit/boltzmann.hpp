/// @file boltzmann.hpp
/// @brief Nonlinear fixed-point testbed: a single implicit collision stage
///        on an angle-energy grid, with synthetic emissivity/opacity
///        kernels whose stiffness is controlled by a matter-density knob.
///
/// The stage update f = (f_prev + dt*eta(f)) / (1 + dt*chi(f)) is a
/// contraction on the admissible box [0,1]^dim; the contraction factor
/// approaches a density-dependent limit below one, so higher densities make
/// the fixed point harder for plain iteration without ever breaking it.

#ifndef ANDERSONKIT_BOLTZMANN_HPP
#define ANDERSONKIT_BOLTZMANN_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "andersonkit/solvers.hpp"
#include "andersonkit/trace.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

/// Angle-energy discretization. Energy nodes progress geometrically from
/// e_min = 0.1 up to e_max; angular weights are uniform and sum to one
/// (the kernels are angularly isotropic, so only the angle count matters
/// for problem size).
struct KineticGrid {
    std::size_t n_angles = 0;
    std::size_t n_energies = 0;
    Vector energy_nodes;
    Vector quadrature_weights;

    std::size_t dimension() const { return n_angles * n_energies; }
    std::size_t index(std::size_t angle, std::size_t energy) const {
        return angle * n_energies + energy;
    }
};

inline KineticGrid build_grid(std::size_t n_angles = 110, std::size_t n_energies = 64,
                              double e_max = 300.0) {
    if (n_angles < 1 || n_energies < 1) throw std::invalid_argument("build_grid: empty grid");
    if (!(e_max > 0.0)) throw std::invalid_argument("build_grid: e_max <= 0");
    KineticGrid grid;
    grid.n_angles = n_angles;
    grid.n_energies = n_energies;
    grid.energy_nodes.resize(n_energies);
    if (n_energies == 1) {
        grid.energy_nodes[0] = e_max;
    } else {
        const double e_min = 0.1;
        const double ratio = std::pow(e_max / e_min,
                                      1.0 / static_cast<double>(n_energies - 1));
        double node = e_min;
        for (std::size_t j = 0; j < n_energies; ++j) {
            grid.energy_nodes[j] = node;
            node *= ratio;
        }
        grid.energy_nodes[n_energies - 1] = e_max; // pin the endpoint exactly
    }
    grid.quadrature_weights.assign(n_angles, 1.0 / static_cast<double>(n_angles));
    return grid;
}

/// Occupation state for one implicit stage: the unknown f, the previous
/// time level f_prev, and the step size. Admissibility (entries in [0,1])
/// is checked, never clipped; violations are counted for diagnostics.
struct DistributionState {
    Vector f;
    Vector f_prev;
    double dt = 1.0;
};

inline std::size_t count_admissibility_violations(const Vector& f) {
    std::size_t count = 0;
    for (const double x : f)
        if (x < 0.0 || x > 1.0) ++count;
    return count;
}

/// Total emissivity / total opacity pair. Both scale linearly with the
/// density knob; the absorption coefficient kappa(e) = 1/(1 + e/10) decays
/// with energy and the spontaneous source sigma_em(e) = 0.4 exp(-e/50)
/// stays below kappa everywhere, which keeps the stage update inside
/// [0,1] for admissible inputs.
struct SyntheticKernels {
    double density = 1.0;
    std::function<Vector(const Vector&)> eta_total;
    std::function<Vector(const Vector&)> chi_total;
};

inline double kernel_absorption(double e) { return 1.0 / (1.0 + e / 10.0); }
inline double kernel_emission(double e) { return 0.4 * std::exp(-e / 50.0); }

inline SyntheticKernels synthetic_kernels(double density, const KineticGrid& grid) {
    if (!(density > 0.0)) throw std::invalid_argument("synthetic_kernels: density <= 0");
    Vector kappa(grid.n_energies), sigma(grid.n_energies);
    for (std::size_t j = 0; j < grid.n_energies; ++j) {
        kappa[j] = kernel_absorption(grid.energy_nodes[j]);
        sigma[j] = kernel_emission(grid.energy_nodes[j]);
        if (sigma[j] > kappa[j])
            throw std::logic_error("synthetic_kernels: emission exceeds absorption");
    }

    const auto angular_average = [grid](const Vector& f) {
        Vector phi(grid.n_energies, 0.0);
        for (std::size_t a = 0; a < grid.n_angles; ++a) {
            const double w = grid.quadrature_weights[a];
            for (std::size_t j = 0; j < grid.n_energies; ++j)
                phi[j] += w * f[grid.index(a, j)];
        }
        return phi;
    };

    SyntheticKernels k;
    k.density = density;
    k.eta_total = [grid, density, kappa, sigma, angular_average](const Vector& f) {
        const Vector phi = angular_average(f);
        Vector eta(grid.dimension());
        for (std::size_t a = 0; a < grid.n_angles; ++a)
            for (std::size_t j = 0; j < grid.n_energies; ++j)
                eta[grid.index(a, j)] = density * (kappa[j] * phi[j] + sigma[j]);
        return eta;
    };
    k.chi_total = [grid, density, kappa, angular_average](const Vector& f) {
        const Vector phi = angular_average(f);
        Vector chi(grid.dimension());
        for (std::size_t a = 0; a < grid.n_angles; ++a)
            for (std::size_t j = 0; j < grid.n_energies; ++j)
                chi[grid.index(a, j)] = density * kappa[j] * (1.0 + phi[j]);
        return chi;
    };
    return k;
}

/// G(f) = (f_prev + dt * eta(f)) / (1 + dt * chi(f)), entrywise.
inline Vector boltzmann_g(const DistributionState& state, const SyntheticKernels& kernels) {
    const Vector eta = kernels.eta_total(state.f);
    const Vector chi = kernels.chi_total(state.f);
    Vector g(state.f.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (chi[i] < 0.0)
            throw std::runtime_error("boltzmann_g: negative opacity from kernel");
        g[i] = (state.f_prev[i] + state.dt * eta[i]) / (1.0 + state.dt * chi[i]);
    }
    return g;
}

/// Smooth admissible previous-level occupation 0.5 * exp(-e/100).
inline Vector initial_distribution(const KineticGrid& grid) {
    Vector f(grid.dimension());
    for (std::size_t a = 0; a < grid.n_angles; ++a)
        for (std::size_t j = 0; j < grid.n_energies; ++j)
            f[grid.index(a, j)] = 0.5 * std::exp(-grid.energy_nodes[j] / 100.0);
    return f;
}

/// The implicit stage as a fixed-point problem in the unknown f, starting
/// from f_prev.
inline FixedPointProblem boltzmann_problem(const KineticGrid& grid,
                                           const SyntheticKernels& kernels,
                                           const Vector& f_prev, double dt = 1.0) {
    FixedPointProblem problem;
    problem.dimension = grid.dimension();
    problem.evaluate_g = [kernels, f_prev, dt](const Vector& f) {
        DistributionState state{f, f_prev, dt};
        return boltzmann_g(state, kernels);
    };
    return problem;
}

enum class BoltzmannSolver { picard, aa, alternating_aa, subselected, randomized };

inline const char* to_string(BoltzmannSolver s) {
    switch (s) {
        case BoltzmannSolver::picard: return "picard";
        case BoltzmannSolver::aa: return "aa";
        case BoltzmannSolver::alternating_aa: return "alternating_aa";
        case BoltzmannSolver::subselected: return "subselected";
        case BoltzmannSolver::randomized: return "randomized";
    }
    return "unknown";
}

inline const std::vector<BoltzmannSolver>& all_boltzmann_solvers() {
    static const std::vector<BoltzmannSolver> solvers = {
        BoltzmannSolver::picard, BoltzmannSolver::aa, BoltzmannSolver::alternating_aa,
        BoltzmannSolver::subselected, BoltzmannSolver::randomized};
    return solvers;
}

struct BoltzmannCell {
    double density = 0.0;
    BoltzmannSolver solver = BoltzmannSolver::picard;
    double mean_iterations = 0.0;
    double mean_wall_time_s = 0.0;
    bool converged = false;
    std::size_t admissibility_violations = 0;
    Vector fixed_point; // from the first repeat
};

struct BoltzmannSuiteOptions {
    std::size_t n_angles = 110;
    std::size_t n_energies = 64;
    double e_max = 300.0;
    double dt = 1.0;
    std::size_t m = 3;
    std::size_t p = 3;
    double omega = 1.0;
    double tol = 1e-10;
    std::size_t max_iter = 20000;
    double epsilon = 1e-8;     // bound target for the reduced variants
    double batch_fraction = 0.1;
    std::size_t repeats = 30;
};

/// Solves one implicit stage per (density, solver) cell, timing each of
/// `repeats` identical runs. Iteration counts are deterministic given the
/// seed; only the wall time is averaged.
inline std::vector<BoltzmannCell> run_boltzmann_suite(const std::vector<double>& densities,
                                                      const std::vector<BoltzmannSolver>& solvers,
                                                      const BoltzmannSuiteOptions& opt,
                                                      std::uint64_t seed) {
    if (densities.empty()) throw std::invalid_argument("run_boltzmann_suite: no densities");
    if (solvers.empty()) throw std::invalid_argument("run_boltzmann_suite: no solvers");
    const KineticGrid grid = build_grid(opt.n_angles, opt.n_energies, opt.e_max);
    const Vector f_prev = initial_distribution(grid);
    const std::size_t n = grid.dimension();

    std::vector<BoltzmannCell> cells;
    cells.reserve(densities.size() * solvers.size());
    for (const double density : densities) {
        const SyntheticKernels kernels = synthetic_kernels(density, grid);
        const FixedPointProblem problem = boltzmann_problem(grid, kernels, f_prev, opt.dt);
        for (const BoltzmannSolver solver : solvers) {
            SolveConfig cfg;
            cfg.omega = opt.omega;
            cfg.tol = opt.tol;
            cfg.max_iter = opt.max_iter;
            cfg.m = opt.m;
            cfg.p = opt.p;
            ProjectionPlan plan;
            AdaptiveController ctrl;
            const ProjectionPlan* plan_ptr = nullptr;
            const AdaptiveController* ctrl_ptr = nullptr;
            switch (solver) {
                case BoltzmannSolver::picard: cfg.mode = SolveMode::picard; break;
                case BoltzmannSolver::aa: cfg.mode = SolveMode::aa; break;
                case BoltzmannSolver::alternating_aa: cfg.mode = SolveMode::alternating_aa; break;
                case BoltzmannSolver::subselected:
                case BoltzmannSolver::randomized: {
                    cfg.mode = SolveMode::reduced_alternating_aa;
                    plan = default_plan(n,
                                        solver == BoltzmannSolver::subselected
                                            ? ProjectionStrategy::subselect
                                            : ProjectionStrategy::randomized,
                                        opt.batch_fraction,
                                        split_seed(seed, "boltzmann/rows"));
                    ctrl.epsilon = opt.epsilon;
                    ctrl.k_star = std::min(opt.max_iter, n);
                    plan_ptr = &plan;
                    ctrl_ptr = &ctrl;
                    break;
                }
            }

            BoltzmannCell cell;
            cell.density = density;
            cell.solver = solver;
            double total_time = 0.0;
            const std::size_t repeats = opt.repeats > 0 ? opt.repeats : 1;
            for (std::size_t rep = 0; rep < repeats; ++rep) {
                SolveResult result = aar_solve(problem, cfg, plan_ptr, ctrl_ptr, seed, &f_prev);
                total_time += result.trace.solve_time_s;
                if (rep == 0) {
                    cell.mean_iterations = static_cast<double>(result.trace.iterations);
                    cell.converged = result.trace.status == SolveStatus::converged;
                    cell.admissibility_violations = count_admissibility_violations(result.x);
                    cell.fixed_point = std::move(result.x);
                }
            }
            cell.mean_wall_time_s = total_time / static_cast<double>(repeats);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

inline void write_boltzmann_csv(std::ostream& out, const std::vector<BoltzmannCell>& cells,
                                const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) out << "# " << line << "\n";
    out << "density,solver,mean_iterations,mean_wall_time_s,converged\n";
    for (const BoltzmannCell& c : cells)
        out << format_double(c.density) << ',' << to_string(c.solver) << ','
            << format_double(c.mean_iterations) << ',' << format_double(c.mean_wall_time_s)
            << ',' << (c.converged ? 1 : 0) << "\n";
}

} // namespace ank

#endif // ANDERSONKIT_BOLTZMANN_HPP
