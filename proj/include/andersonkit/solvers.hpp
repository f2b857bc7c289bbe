/// @file solvers.hpp
/// @brief Fixed-point solver engine: Richardson relaxation, Anderson
///        mixing, alternating Anderson acceleration, and the reduced
///        variant with adaptive row-selection accuracy control.
///
/// One engine drives four modes. Every p-th iteration takes an Anderson
/// step built from the FIFO window of iterate/residual differences; the
/// iterations in between are plain relaxation sweeps. Linear systems run
/// through a split form of the Anderson update (mixing followed by one
/// relaxation step on the mixed iterate), which is algebraically the
/// standard mixing applied to the relaxed linear operator; nonlinear
/// fixed points run the direct update.

#ifndef ANDERSONKIT_SOLVERS_HPP
#define ANDERSONKIT_SOLVERS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "andersonkit/controller.hpp"
#include "andersonkit/dense_qr.hpp"
#include "andersonkit/history.hpp"
#include "andersonkit/precond.hpp"
#include "andersonkit/projection.hpp"
#include "andersonkit/rng.hpp"
#include "andersonkit/sparse.hpp"
#include "andersonkit/trace.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

enum class SolveMode { picard, aa, alternating_aa, reduced_alternating_aa };

inline const char* to_string(SolveMode m) {
    switch (m) {
        case SolveMode::picard: return "picard";
        case SolveMode::aa: return "aa";
        case SolveMode::alternating_aa: return "alternating_aa";
        case SolveMode::reduced_alternating_aa: return "reduced_alternating_aa";
    }
    return "unknown";
}

struct SolveConfig {
    double omega = 1.0;       // relaxation weight
    std::size_t p = 1;        // relaxation sweeps per Anderson step
    std::size_t m = 1;        // history cap
    double tol = 1e-8;        // relative-residual threshold
    std::size_t max_iter = 1000;
    SolveMode mode = SolveMode::aa;

    void validate() const {
        if (!(omega > 0.0)) throw std::invalid_argument("SolveConfig: omega <= 0");
        if (p < 1) throw std::invalid_argument("SolveConfig: p < 1");
        if (m < 1) throw std::invalid_argument("SolveConfig: m < 1");
        if (!(tol > 0.0)) throw std::invalid_argument("SolveConfig: tol <= 0");
    }
};

/// A fixed point x = G(x). residual_of defaults to G(x) - x; supply it
/// directly when a cheaper or numerically tighter form exists.
struct FixedPointProblem {
    std::size_t dimension = 0;
    std::function<Vector(const Vector&)> evaluate_g;
    std::function<Vector(const Vector&)> residual_of; // optional

    Vector residual(const Vector& x) const {
        if (residual_of) return residual_of(x);
        Vector r = evaluate_g(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= x[i];
        return r;
    }
};

/// x + omega * r
inline Vector richardson_step(const Vector& x, const Vector& r, double omega) {
    if (x.size() != r.size()) throw std::invalid_argument("richardson_step: length mismatch");
    Vector out = x;
    axpy(omega, r, out);
    return out;
}

using LsSolver = std::function<Vector(const TallMatrix& r_k, const Vector& rhs)>;

/// The Anderson update direction r_k - (X_k + R_k) g with g from the
/// supplied least-squares solver (possibly reduced or perturbed).
inline Vector anderson_mixing(const AndersonHistory& history, const Vector& r_k,
                              const LsSolver& ls) {
    if (history.empty()) throw std::invalid_argument("anderson_mixing: empty history");
    const TallMatrix r_mat = history.r_matrix();
    const TallMatrix x_mat = history.x_matrix();
    const Vector g = ls(r_mat, r_k);
    Vector delta = r_k;
    const Vector xg = multiply(x_mat, g);
    const Vector rg = multiply(r_mat, g);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= xg[i] + rg[i];
    return delta;
}

struct SolveResult {
    Vector x;
    IterationTrace trace;
};

namespace detail {

/// Linear backend: residual r = M^{-1}(b - A x); the Anderson step mixes
/// (x_bar = x - X g) and then relaxes on the freshly evaluated residual of
/// the mixed iterate.
struct LinearBackend {
    const SparseMatrix* a;
    const Vector* b;
    const Preconditioner* precond;
    double omega;

    std::size_t dimension() const { return a->n_rows; }
    double initial_step_scale() const { return omega; }

    Vector residual(const Vector& x) const {
        Vector r = ank::residual(*a, *b, x);
        return precond ? precond->apply(r) : std::move(r);
    }

    std::pair<Vector, Vector> anderson_trial(const Vector& x, const Vector& /*r*/,
                                             const TallMatrix& x_mat,
                                             const TallMatrix& /*r_mat*/,
                                             const Vector& g) const {
        Vector x_bar = x;
        const Vector xg = multiply(x_mat, g);
        for (std::size_t i = 0; i < x_bar.size(); ++i) x_bar[i] -= xg[i];
        const Vector r_bar = residual(x_bar);
        Vector x_new = richardson_step(x_bar, r_bar, omega);
        Vector r_new = residual(x_new);
        return {std::move(x_new), std::move(r_new)};
    }
};

/// Nonlinear backend: the direct update x + r - (X + R) g.
struct GenericBackend {
    const FixedPointProblem* problem;
    double omega;

    std::size_t dimension() const { return problem->dimension; }
    double initial_step_scale() const { return 1.0; } // unrelaxed first correction

    Vector residual(const Vector& x) const { return problem->residual(x); }

    std::pair<Vector, Vector> anderson_trial(const Vector& x, const Vector& r,
                                             const TallMatrix& x_mat, const TallMatrix& r_mat,
                                             const Vector& g) const {
        Vector x_new = x;
        const Vector xg = multiply(x_mat, g);
        const Vector rg = multiply(r_mat, g);
        for (std::size_t i = 0; i < x_new.size(); ++i) x_new[i] += r[i] - xg[i] - rg[i];
        Vector r_new = residual(x_new);
        return {std::move(x_new), std::move(r_new)};
    }
};

template <class Backend>
SolveResult run_engine(const Backend& backend, const SolveConfig& config_in,
                       const ProjectionPlan* plan_in, const AdaptiveController* ctrl_in,
                       std::uint64_t seed, const Vector* x0) {
    SolveConfig cfg = config_in;
    cfg.validate();
    if (cfg.mode == SolveMode::aa) cfg.p = 1;
    const bool mixing_enabled = cfg.mode != SolveMode::picard;
    const std::size_t n = backend.dimension();

    const bool use_plan = cfg.mode == SolveMode::reduced_alternating_aa &&
                          plan_in != nullptr && plan_in->strategy != ProjectionStrategy::none;
    if (cfg.mode == SolveMode::reduced_alternating_aa && plan_in == nullptr)
        throw std::invalid_argument("aar_solve: reduced mode needs a projection plan");
    ProjectionPlan plan = plan_in ? *plan_in : ProjectionPlan{};
    if (use_plan) plan.validate(n);
    const bool use_ctrl = use_plan && ctrl_in != nullptr;
    AdaptiveController ctrl = ctrl_in ? *ctrl_in : AdaptiveController{};
    if (use_ctrl) ctrl.validate();
    // the plan owns the row-selection stream; the solve seed covers the rest
    Rng row_rng = make_stream(use_plan ? plan.seed : seed, "projection/rows");

    SolveResult out;
    IterationTrace& trace = out.trace;
    Timer timer;

    Vector x = x0 ? *x0 : Vector(n, 0.0);
    if (x.size() != n) throw std::invalid_argument("aar_solve: x0 length mismatch");
    Vector r = backend.residual(x);
    if (r.size() != n) throw std::invalid_argument("aar_solve: residual length mismatch");
    const double r0_norm = norm2(r);
    double r_norm = r0_norm;

    // window capped at the dimension: beyond n columns the difference
    // matrix cannot stay full rank and the least-squares block would go wide
    AndersonHistory history(std::min(cfg.m, n));
    const auto relative = [&](double rn) { return r0_norm == 0.0 ? 0.0 : rn / r0_norm; };
    const auto record = [&](std::size_t k, bool anderson, std::size_t s, bool rollback) {
        trace.rows.push_back({k, r_norm, anderson, s, rollback, timer.seconds()});
    };

    std::size_t k = 0;
    for (;;) {
        if (!std::isfinite(r_norm) || !all_finite(r)) {
            record(k, false, 0, false);
            trace.status = SolveStatus::breakdown;
            break;
        }
        if (relative(r_norm) <= cfg.tol) {
            record(k, false, 0, false);
            trace.status = SolveStatus::converged;
            break;
        }
        if (k >= cfg.max_iter) {
            record(k, false, 0, false);
            trace.status = SolveStatus::max_iter;
            break;
        }

        const bool anderson_now = mixing_enabled && k >= 1 && k % cfg.p == 0 && !history.empty();
        Vector x_next, r_next;

        if (!anderson_now) {
            record(k, false, 0, false);
            const double scale = k == 0 ? backend.initial_step_scale() : cfg.omega;
            x_next = richardson_step(x, r, scale);
            r_next = backend.residual(x_next);
        } else {
            const TallMatrix x_mat = history.x_matrix();
            const TallMatrix r_mat = history.r_matrix();
            // the candidate dimension starts from the plan's base each
            // Anderson step (the bound loosens as the residual falls, so a
            // bound-driven enlargement is local to the step); monotonicity
            // rollbacks ratchet the base itself
            ProjectionPlan candidate = plan;
            for (;;) {
                const std::size_t s = use_plan ? std::min(candidate.s_current, n) : n;
                std::vector<std::size_t> rows;
                if (use_plan) {
                    rows = plan.strategy == ProjectionStrategy::subselect
                               ? select_rows_subselect(r, s)
                               : select_rows_random(n, s, row_rng);
                }

                std::vector<BoundWitness> witnesses;
                if (use_ctrl && s < n) {
                    witnesses = bound_surrogate(r_mat, rows, history.metas(), ctrl);
                    if (!all_satisfied(witnesses)) {
                        StepResult step;
                        step.witnesses = &witnesses;
                        step.prior_anderson_residual_norm = ctrl.last_accepted_anderson_residual;
                        controller_step(ctrl, candidate, n, step); // grows candidate s
                        record(k, true, s, true);
                        continue;
                    }
                }

                Vector g;
                double delta_r_norm = 0.0;
                {
                    const Timer ls_timer;
                    if (use_plan && s < n) {
                        const ProjectedLs pls = project_ls(r_mat, r, rows);
                        delta_r_norm = pls.delta_r_norm;
                        g = least_squares_solve(pls.m, pls.rhs);
                        trace.ls_entries += pls.m.n_rows * pls.m.n_cols;
                    } else {
                        g = least_squares_solve(r_mat, r);
                        trace.ls_entries += r_mat.n_rows * r_mat.n_cols;
                    }
                    trace.ls_time_s += ls_timer.seconds();
                }

                auto [x_trial, r_trial] = backend.anderson_trial(x, r, x_mat, r_mat, g);
                const double trial_norm = norm2(r_trial);

                if (use_ctrl) {
                    StepResult step;
                    step.trial_residual_norm = trial_norm;
                    step.prior_anderson_residual_norm = ctrl.last_accepted_anderson_residual;
                    step.delta_r_norm = delta_r_norm;
                    step.witnesses = &witnesses;
                    const ControllerDecision decision = controller_step(ctrl, candidate, n, step);
                    if (decision == ControllerDecision::rollback_and_refine)
                        plan.s_current = candidate.s_current; // persistent ratchet
                    if (decision != ControllerDecision::accept) {
                        record(k, true, s, true);
                        continue;
                    }
                    ctrl.last_accepted_anderson_residual = trial_norm;
                }
                record(k, true, s, false);
                x_next = std::move(x_trial);
                r_next = std::move(r_trial);
                break;
            }
        }

        HistoryColumnMeta meta;
        meta.iteration = k + 1;
        meta.r_norm = norm2(r_next);
        Vector x_diff = subtract(x_next, x);
        Vector r_diff = subtract(r_next, r);
        meta.dx_norm = norm2(x_diff);
        history.push(std::move(x_diff), std::move(r_diff), meta);

        x = std::move(x_next);
        r = std::move(r_next);
        r_norm = meta.r_norm;
        ++k;
    }

    trace.iterations = k;
    trace.final_relative_residual = relative(r_norm);
    trace.solve_time_s = timer.seconds();
    out.x = std::move(x);
    return out;
}

} // namespace detail

/// Alternating Anderson acceleration on a generic fixed point.
inline SolveResult aar_solve(const FixedPointProblem& problem, const SolveConfig& config,
                             const ProjectionPlan* plan = nullptr,
                             const AdaptiveController* controller = nullptr,
                             std::uint64_t seed = 0, const Vector* x0 = nullptr) {
    detail::GenericBackend backend{&problem, config.omega};
    return detail::run_engine(backend, config, plan, controller, seed, x0);
}

/// Alternating Anderson acceleration on a (left-preconditioned) linear
/// system, using the split mixing/relaxation form of the update.
inline SolveResult aar_solve_linear(const SparseMatrix& a, const Vector& b,
                                    const Preconditioner* precond, const SolveConfig& config,
                                    const ProjectionPlan* plan = nullptr,
                                    const AdaptiveController* controller = nullptr,
                                    std::uint64_t seed = 0, const Vector* x0 = nullptr) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("aar_solve_linear: not square");
    if (b.size() != a.n_rows) throw std::invalid_argument("aar_solve_linear: rhs mismatch");
    detail::LinearBackend backend{&a, &b, precond, config.omega};
    return detail::run_engine(backend, config, plan, controller, seed, x0);
}

/// The relaxed linear operator G(x) = (I - omega A)x + omega b as a generic
/// fixed-point problem (useful for cross-checking the split update against
/// the direct mixing form).
inline FixedPointProblem linear_fixed_point(const SparseMatrix& a, const Vector& b,
                                            const Preconditioner* precond, double omega) {
    FixedPointProblem problem;
    problem.dimension = a.n_rows;
    problem.evaluate_g = [&a, &b, precond, omega](const Vector& x) {
        Vector r = residual(a, b, x);
        if (precond) r = precond->apply(r);
        Vector g = x;
        axpy(omega, r, g);
        return g;
    };
    problem.residual_of = [&a, &b, precond, omega](const Vector& x) {
        Vector r = residual(a, b, x);
        if (precond) r = precond->apply(r);
        scale(r, omega);
        return r;
    };
    return problem;
}

} // namespace ank

#endif // ANDERSONKIT_SOLVERS_HPP
