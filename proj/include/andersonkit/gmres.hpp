/// @file gmres.hpp
/// @brief Restarted GMRES baseline: Arnoldi with modified Gram-Schmidt and
///        Givens-rotation least-squares, optionally left-preconditioned.
///
/// Deliberately textbook-grade; it exists as a timing baseline, not a
/// contribution.

#ifndef ANDERSONKIT_GMRES_HPP
#define ANDERSONKIT_GMRES_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "andersonkit/precond.hpp"
#include "andersonkit/solvers.hpp"
#include "andersonkit/sparse.hpp"
#include "andersonkit/trace.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

inline SolveResult gmres_solve(const SparseMatrix& a, const Vector& b,
                               const Preconditioner* precond, std::size_t restart, double tol,
                               std::size_t max_iter, const Vector* x0 = nullptr) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("gmres_solve: not square");
    if (b.size() != a.n_rows) throw std::invalid_argument("gmres_solve: rhs mismatch");
    if (restart < 1) throw std::invalid_argument("gmres_solve: restart < 1");
    const std::size_t n = a.n_rows;

    const auto prec_residual = [&](const Vector& x) {
        Vector r = residual(a, b, x);
        return precond ? precond->apply(r) : std::move(r);
    };

    SolveResult out;
    IterationTrace& trace = out.trace;
    Timer timer;

    Vector x = x0 ? *x0 : Vector(n, 0.0);
    Vector r = prec_residual(x);
    const double r0_norm = norm2(r);
    const auto relative = [&](double rn) { return r0_norm == 0.0 ? 0.0 : rn / r0_norm; };
    trace.rows.push_back({0, r0_norm, false, 0, false, timer.seconds()});

    std::size_t total_iter = 0;
    double beta = r0_norm;
    double prev_cycle_beta = r0_norm;
    bool happy = false;

    while (relative(beta) > tol && total_iter < max_iter && std::isfinite(beta)) {
        // Arnoldi cycle from the current residual
        std::vector<Vector> v;
        v.reserve(restart + 1);
        Vector vr = r;
        scale(vr, 1.0 / beta);
        v.push_back(std::move(vr));

        // column-major Hessenberg, (restart+1) x restart
        std::vector<double> h((restart + 1) * restart, 0.0);
        const auto hat = [&](std::size_t i, std::size_t j) -> double& {
            return h[j * (restart + 1) + i];
        };
        std::vector<double> cs(restart, 0.0), sn(restart, 0.0);
        Vector g(restart + 1, 0.0);
        g[0] = beta;

        std::size_t j = 0;
        happy = false;
        while (j < restart && total_iter < max_iter) {
            Vector w = matvec(a, v[j]);
            if (precond) w = precond->apply(w);
            for (std::size_t i = 0; i <= j; ++i) {
                const double hij = dot(w, v[i]);
                hat(i, j) = hij;
                axpy(-hij, v[i], w);
            }
            const double hj1 = norm2(w);
            hat(j + 1, j) = hj1;

            if (hj1 > 1e-14 * beta) {
                scale(w, 1.0 / hj1);
                v.push_back(std::move(w));
            } else {
                happy = true; // invariant subspace reached
            }

            // apply accumulated rotations, then a new one zeroing h(j+1,j)
            for (std::size_t i = 0; i < j; ++i) {
                const double t = cs[i] * hat(i, j) + sn[i] * hat(i + 1, j);
                hat(i + 1, j) = -sn[i] * hat(i, j) + cs[i] * hat(i + 1, j);
                hat(i, j) = t;
            }
            const double denom = std::hypot(hat(j, j), hat(j + 1, j));
            if (denom == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hat(j, j) / denom;
                sn[j] = hat(j + 1, j) / denom;
            }
            hat(j, j) = cs[j] * hat(j, j) + sn[j] * hat(j + 1, j);
            hat(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            ++total_iter;
            ++j;
            trace.rows.push_back(
                {total_iter, std::abs(g[j]), false, 0, false, timer.seconds()});
            if (happy || relative(std::abs(g[j])) <= tol) break;
        }

        // y solves the small triangular system; x += V y
        Vector y(j, 0.0);
        for (std::size_t i = j; i-- > 0;) {
            double s = g[i];
            for (std::size_t l = i + 1; l < j; ++l) s -= hat(i, l) * y[l];
            y[i] = hat(i, i) != 0.0 ? s / hat(i, i) : 0.0;
        }
        for (std::size_t l = 0; l < j; ++l) axpy(y[l], v[l], x);

        r = prec_residual(x);
        beta = norm2(r);
        if (happy) break;
        if (beta >= prev_cycle_beta * (1.0 - 1e-12)) {
            trace.stagnated = true; // no progress over a full cycle
            break;
        }
        prev_cycle_beta = beta;
    }

    trace.iterations = total_iter;
    trace.final_relative_residual = relative(beta);
    trace.solve_time_s = timer.seconds();
    if (!std::isfinite(beta))
        trace.status = SolveStatus::breakdown;
    else if (relative(beta) <= tol)
        trace.status = SolveStatus::converged;
    else
        trace.status = SolveStatus::max_iter;
    out.x = std::move(x);
    return out;
}

} // namespace ank

#endif // ANDERSONKIT_GMRES_HPP
