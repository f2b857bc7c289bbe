/// @file controller.hpp
/// @brief Adaptive accuracy control for reduced Anderson steps: the
///        computable per-column error estimate, the bound check, and the
///        accept/rollback decision rule.

#ifndef ANDERSONKIT_CONTROLLER_HPP
#define ANDERSONKIT_CONTROLLER_HPP

#include <cstddef>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "andersonkit/history.hpp"
#include "andersonkit/projection.hpp"

namespace ank {

/// Controller state for one solve. gamma replaces the (unobservable)
/// smallest singular value in the rigorous bound and shrinks whenever a
/// step that passed the bound still failed to decrease the residual.
struct AdaptiveController {
    double gamma = 1.0;
    std::size_t k_star = 1;   // iteration-count stand-in in the bound
    double epsilon = 1e-8;    // target accuracy
    double gamma_shrink = 0.5;
    double last_accepted_anderson_residual = std::numeric_limits<double>::infinity();

    void validate() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("AdaptiveController: gamma <= 0");
        if (!(epsilon > 0.0)) throw std::invalid_argument("AdaptiveController: epsilon <= 0");
        if (k_star < 1) throw std::invalid_argument("AdaptiveController: k_star < 1");
        if (!(gamma_shrink > 0.0) || gamma_shrink >= 1.0)
            throw std::invalid_argument("AdaptiveController: gamma_shrink out of (0,1)");
    }
};

/// Per-column bound evaluation at one Anderson step.
struct BoundWitness {
    std::size_t iteration = 0;       // history column's iteration index i
    double b_i = 0.0;                // heuristic bound value
    double e_i_norm_estimate = 0.0;  // measured perturbation surrogate
    bool satisfied = false;
};

/// B_i = gamma / (k_star * ||r^i|| * ||x^i - x^{i-1}||).
inline double heuristic_bound(double gamma, std::size_t k_star, double r_i_norm,
                              double dx_i_norm) {
    if (!(r_i_norm > 0.0) || !(dx_i_norm > 0.0))
        throw std::invalid_argument("heuristic_bound: zero norm (stagnated iterate)");
    return gamma / (static_cast<double>(k_star) * r_i_norm * dx_i_norm);
}

/// Compares each live history column's restriction defect (norm of the
/// part of the column outside the selected rows, relative to the full
/// column norm) against B_i * epsilon. The defect ratio is a computable
/// surrogate for the per-column backward-error magnitude; the rigorous
/// bound is exercised with explicitly constructed perturbations in the
/// noise lab instead.
inline std::vector<BoundWitness> bound_surrogate(const TallMatrix& r_k,
                                                 const std::vector<std::size_t>& rows,
                                                 const std::deque<HistoryColumnMeta>& metas,
                                                 const AdaptiveController& ctrl) {
    if (metas.size() != r_k.n_cols)
        throw std::invalid_argument("bound_surrogate: meta/column count mismatch");
    const auto defects = column_restriction_defects(r_k, rows);
    std::vector<BoundWitness> out(r_k.n_cols);
    for (std::size_t j = 0; j < r_k.n_cols; ++j) {
        BoundWitness w;
        w.iteration = metas[j].iteration;
        w.b_i = heuristic_bound(ctrl.gamma, ctrl.k_star, metas[j].r_norm, metas[j].dx_norm);
        const auto& [unsel, total] = defects[j];
        w.e_i_norm_estimate = total > 0.0 ? unsel / total : 0.0;
        w.satisfied = w.e_i_norm_estimate <= w.b_i * ctrl.epsilon;
        out[j] = w;
    }
    return out;
}

inline bool all_satisfied(const std::vector<BoundWitness>& witnesses) {
    for (const BoundWitness& w : witnesses)
        if (!w.satisfied) return false;
    return true;
}

enum class ControllerDecision { accept, rollback_and_refine, proceed_with_refine };

/// Inputs to one controller decision: the residual norm produced by the
/// trial Anderson step, the residual norm of the last accepted Anderson
/// step, the discarded-RHS norm, and the per-column bound witnesses. The
/// trial fields are meaningful only when the witnesses are all satisfied
/// (no trial is computed otherwise).
struct StepResult {
    double trial_residual_norm = std::numeric_limits<double>::infinity();
    double prior_anderson_residual_norm = std::numeric_limits<double>::infinity();
    double delta_r_norm = 0.0;
    const std::vector<BoundWitness>* witnesses = nullptr;
};

/// Accept/rollback rule for one trial Anderson step. At s = n the reduced
/// problem is exact and the step is accepted unconditionally, which also
/// guarantees termination of the retry loop. Otherwise: a step whose bound
/// witnesses hold and whose residual decreased is accepted; a step whose
/// witnesses hold but whose residual did not decrease shrinks gamma, grows
/// s by one batch, and rolls back; a step whose witnesses fail grows s and
/// retries without consuming the iterate.
inline ControllerDecision controller_step(AdaptiveController& ctrl, ProjectionPlan& plan,
                                          std::size_t n, const StepResult& step) {
    if (plan.s_current >= n) {
        plan.s_current = n;
        return ControllerDecision::accept;
    }
    const bool bound_ok = step.witnesses == nullptr || all_satisfied(*step.witnesses);
    if (bound_ok) {
        if (step.trial_residual_norm < step.prior_anderson_residual_norm)
            return ControllerDecision::accept;
        ctrl.gamma *= ctrl.gamma_shrink;
        plan.s_current = std::min(n, plan.s_current + plan.batch_size(n));
        return ControllerDecision::rollback_and_refine;
    }
    plan.s_current = std::min(n, plan.s_current + plan.batch_size(n));
    return ControllerDecision::proceed_with_refine;
}

} // namespace ank

#endif // ANDERSONKIT_CONTROLLER_HPP
