/// @file perturb.hpp
/// @brief Noise-injection laboratory: explicit perturbations of the
///        Anderson least-squares, backward-error measurement, and
///        randomized verification of the accuracy bounds with perturbation
///        matrices whose norms are known exactly.

#ifndef ANDERSONKIT_PERTURB_HPP
#define ANDERSONKIT_PERTURB_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "andersonkit/dense_qr.hpp"
#include "andersonkit/history.hpp"
#include "andersonkit/rng.hpp"
#include "andersonkit/solvers.hpp"
#include "andersonkit/sparse.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

/// Noise magnitude control for one sweep entry.
struct NoiseSchedule {
    double epsilon = 1e-8;    // tuning magnitude
    std::size_t k_star = 100; // iteration-count stand-in in the schedule
    std::uint64_t seed = 0;

    void validate() const {
        if (!(epsilon >= 0.0)) throw std::invalid_argument("NoiseSchedule: epsilon < 0");
        if (k_star < 1) throw std::invalid_argument("NoiseSchedule: k_star < 1");
    }
};

/// The 100x100 diagonal test system diag(1e-4, 2, 3, ..., 100) with
/// b = A * ones, so the exact solution is the ones vector.
inline std::pair<SparseMatrix, Vector> diag_testcase() {
    Vector d(100);
    d[0] = 1e-4;
    for (std::size_t i = 1; i < 100; ++i) d[i] = static_cast<double>(i + 1);
    SparseMatrix a = diagonal_matrix(d);
    Vector ones(100, 1.0);
    Vector b = matvec(a, ones);
    return {std::move(a), std::move(b)};
}

/// Injected-noise magnitude (eps / k_star) * sigma_min(T_k) / (||r^k|| * ||x^k - x^{k-1}||).
inline double epsilon_k(double eps, std::size_t k_star, double sigma_min_tk, double r_norm,
                        double dx_norm) {
    if (k_star < 1) throw std::invalid_argument("epsilon_k: k_star < 1");
    if (!(sigma_min_tk >= 0.0)) throw std::invalid_argument("epsilon_k: negative sigma_min");
    if (!(r_norm > 0.0) || !(dx_norm > 0.0))
        throw std::invalid_argument("epsilon_k: zero norm (stagnated iterate)");
    return (eps / static_cast<double>(k_star)) * sigma_min_tk / (r_norm * dx_norm);
}

/// ||E * g||_2 for a realized perturbation acting on the computed mixing
/// coefficients.
inline double backward_error_delta(const TallMatrix& e_columns, const Vector& g) {
    return norm2(multiply(e_columns, g));
}

namespace detail {

/// ||M||_2 of a tall dense matrix by power iteration on M^T M.
inline double tall_two_norm_estimate(const TallMatrix& m, Rng& rng, std::size_t iters = 40) {
    Vector v(m.n_cols);
    for (double& x : v) x = rng.normal();
    double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    scale(v, 1.0 / nv);
    double estimate = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        Vector w = multiply(m, v);
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        estimate = nw;
        v = multiply_transpose(m, w);
        const double nv2 = norm2(v);
        if (nv2 == 0.0) break;
        scale(v, 1.0 / nv2);
    }
    return estimate;
}

inline Eigen::MatrixXd to_dense(const SparseMatrix& a) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.n_rows),
                                              static_cast<Eigen::Index>(a.n_cols));
    for (std::size_t i = 0; i < a.n_rows; ++i)
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a.col_indices[k])) =
                a.values[k];
    return d;
}

/// Exact ||A||_2 by dense SVD (small instances only).
inline double dense_two_norm(const SparseMatrix& a) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(to_dense(a));
    return svd.singularValues()(0);
}

/// Exact ||I - omega*A||_2 by dense SVD.
inline double dense_relaxation_norm(const SparseMatrix& a, double omega) {
    Eigen::MatrixXd d = -omega * to_dense(a);
    for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, i) += 1.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(d);
    return svd.singularValues()(0);
}

} // namespace detail

/// Solves argmin ||(R_k + eps_k ||R_k||_2 E_hat) g - r_k||_2 with E_hat an
/// i.i.d. standard-normal matrix of the shape of R_k normalized to unit
/// 2-norm by power iteration. Returns the coefficients and the realized
/// (scaled) perturbation, which is the zero matrix when eps_k = 0. The
/// generator is advanced identically for every eps_k so perturbed and
/// baseline runs stay stream-comparable.
inline std::pair<Vector, TallMatrix> perturbed_ls_solve(const TallMatrix& r_k, const Vector& rhs,
                                                        double eps_k, Rng& rng) {
    if (eps_k < 0.0) throw std::invalid_argument("perturbed_ls_solve: eps_k < 0");
    TallMatrix e(r_k.n_rows, r_k.n_cols);
    for (double& x : e.values) x = rng.normal();
    const double e_norm = detail::tall_two_norm_estimate(e, rng);
    const double r_norm2 = detail::tall_two_norm_estimate(r_k, rng);
    const double scale_factor = e_norm > 0.0 ? eps_k * r_norm2 / e_norm : 0.0;
    for (double& x : e.values) x *= scale_factor;

    TallMatrix perturbed = r_k;
    for (std::size_t i = 0; i < perturbed.values.size(); ++i)
        perturbed.values[i] += e.values[i];
    Vector g = least_squares_solve(perturbed, rhs);
    if (!all_finite(g)) throw std::runtime_error("perturbed_ls_solve: breakdown");
    return {std::move(g), std::move(e)};
}

/// One recorded Anderson step of a perturbed run.
struct BackwardErrorStep {
    std::size_t iteration = 0;
    double epsilon_k = 0.0;
    double sigma_min_tk = 0.0;
    double delta_k = 0.0;
    double residual_norm = 0.0;
};

/// One sweep entry: the noise magnitude, the per-step records, and the
/// plain residual history (every iteration, not just Anderson steps).
struct SweepEntry {
    double epsilon = 0.0;
    std::vector<BackwardErrorStep> steps;
    std::vector<double> residual_history;
    std::size_t iterations = 0;
    bool converged = false;
    bool breakdown = false;
};

struct BackwardErrorReport {
    std::vector<SweepEntry> entries;
};

/// Runs the relaxed iteration with a perturbed Anderson least-squares on
/// the diagonal test system, once per magnitude in eps_values (an entry
/// with epsilon = 0 reproduces the unperturbed baseline). Entries own
/// disjoint random streams derived from (seed, entry index). The right-hand
/// side is normalized to unit norm: the injected-noise schedule scales with
/// 1/(||r|| ||dx||), so the nominal magnitudes correspond to O(1) data.
inline BackwardErrorReport run_noise_sweep(const std::vector<double>& eps_values,
                                           const SolveConfig& config, std::uint64_t seed,
                                           std::size_t k_star = 100) {
    if (eps_values.empty()) throw std::invalid_argument("run_noise_sweep: empty sweep");
    SolveConfig cfg = config;
    cfg.validate();

    BackwardErrorReport report;
    report.entries.resize(eps_values.size());
    auto [a, b] = diag_testcase();
    const double b_norm = norm2(b);
    for (double& v : b) v /= b_norm;
    const std::size_t n = a.n_rows;

    for (std::size_t entry_idx = 0; entry_idx < eps_values.size(); ++entry_idx) {
        const double eps = eps_values[entry_idx];
        SweepEntry& entry = report.entries[entry_idx];
        entry.epsilon = eps;
        Rng rng = make_stream(seed, "perturb/eps" + std::to_string(entry_idx));

        Vector x(n, 0.0);
        Vector r = residual(a, b, x);
        const double r0_norm = norm2(r);
        double r_norm = r0_norm;
        AndersonHistory history(std::min(cfg.m, n));
        double last_dx_norm = 0.0;

        std::size_t k = 0;
        for (;;) {
            entry.residual_history.push_back(r_norm);
            if (!std::isfinite(r_norm)) {
                entry.breakdown = true;
                break;
            }
            if (r_norm <= cfg.tol * r0_norm) {
                entry.converged = true;
                break;
            }
            if (k >= cfg.max_iter) break;

            Vector x_next;
            const bool anderson_now = k >= 1 && k % cfg.p == 0 && !history.empty();
            if (!anderson_now) {
                x_next = richardson_step(x, r, cfg.omega);
            } else {
                const TallMatrix r_mat = history.r_matrix();
                const TallMatrix x_mat = history.x_matrix();
                const QrFactors f = qr_column_pivoting(r_mat);
                const auto [sigma_min, sigma_max] = singular_extremes(f.t);
                (void)sigma_max;
                if (r_norm == 0.0 || last_dx_norm == 0.0) {
                    entry.breakdown = true; // stagnated iterate
                    break;
                }
                const double ek =
                    eps > 0.0 ? epsilon_k(eps, k_star, sigma_min, r_norm, last_dx_norm) : 0.0;
                auto [g, e_realized] = perturbed_ls_solve(r_mat, r, ek, rng);
                const double delta = backward_error_delta(e_realized, g);
                entry.steps.push_back({k, ek, sigma_min, delta, r_norm});

                Vector x_bar = x;
                const Vector xg = multiply(x_mat, g);
                for (std::size_t i = 0; i < n; ++i) x_bar[i] -= xg[i];
                const Vector r_bar = residual(a, b, x_bar);
                x_next = richardson_step(x_bar, r_bar, cfg.omega);
            }

            Vector r_next = residual(a, b, x_next);
            Vector x_diff = subtract(x_next, x);
            Vector r_diff = subtract(r_next, r);
            last_dx_norm = norm2(x_diff);
            history.push(std::move(x_diff), std::move(r_diff),
                         {k + 1, norm2(r_next), last_dx_norm});
            x = std::move(x_next);
            r_norm = norm2(r_next);
            r = std::move(r_next);
            ++k;
        }
        entry.iterations = k;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Randomized desk verification of the accuracy bounds
// ---------------------------------------------------------------------------

/// Captured solver state at an Anderson iteration of a full-history run,
/// with exact operator norms for checking measured quantities against the
/// rigorous bounds.
struct DeskState {
    SparseMatrix a;
    Vector b;
    Vector x;
    Vector r;
    TallMatrix x_mat;
    TallMatrix r_mat;
    std::vector<double> dx_norms; // ||x^i - x^{i-1}||, i = 1..k
    double r_norm = 0.0;
    double a_norm = 0.0;           // exact ||A||_2
    double relaxation_norm = 0.0;  // exact ||I - omega A||_2, when requested
    double omega = 0.2;
    std::size_t k = 0;
};

/// Runs k = z*p full-history iterations (relaxation sweeps plus exact
/// Anderson steps) on a random well-conditioned system and returns the
/// state at the next Anderson iteration.
inline DeskState make_desk_state(Rng& rng, std::size_t n_min, std::size_t n_max, std::size_t p,
                                 std::size_t z, bool need_relaxation_norm) {
    const std::size_t n = n_min + rng.uniform_index(n_max - n_min + 1);
    std::vector<Triplet> t;
    t.reserve(n * n);
    const double off_scale = 0.4 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = (i == j ? 1.0 : 0.0) + off_scale * rng.normal();
            t.push_back({i, j, v});
        }

    DeskState state;
    state.a = from_triplets(n, n, std::move(t));
    Vector x_star(n);
    for (double& v : x_star) v = rng.normal();
    state.b = matvec(state.a, x_star);
    state.a_norm = detail::dense_two_norm(state.a);
    if (need_relaxation_norm) state.relaxation_norm = detail::dense_relaxation_norm(state.a, state.omega);

    const std::size_t k_target = z * p;
    std::vector<Vector> x_diffs, r_diffs;
    Vector x(n, 0.0);
    Vector r = residual(state.a, state.b, x);
    for (std::size_t k = 0; k < k_target; ++k) {
        Vector x_next;
        if (k >= 1 && k % p == 0) {
            TallMatrix r_mat(n, r_diffs.size());
            TallMatrix x_mat(n, x_diffs.size());
            for (std::size_t j = 0; j < r_diffs.size(); ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    r_mat.at(i, j) = r_diffs[j][i];
                    x_mat.at(i, j) = x_diffs[j][i];
                }
            const Vector g = least_squares_solve(r_mat, r);
            Vector x_bar = x;
            const Vector xg = multiply(x_mat, g);
            for (std::size_t i = 0; i < n; ++i) x_bar[i] -= xg[i];
            const Vector r_bar = residual(state.a, state.b, x_bar);
            x_next = richardson_step(x_bar, r_bar, state.omega);
        } else {
            x_next = richardson_step(x, r, state.omega);
        }
        Vector r_next = residual(state.a, state.b, x_next);
        x_diffs.push_back(subtract(x_next, x));
        r_diffs.push_back(subtract(r_next, r));
        x = std::move(x_next);
        r = std::move(r_next);
    }

    state.k = k_target;
    state.x = std::move(x);
    state.r = r;
    state.r_norm = norm2(state.r);
    state.x_mat = TallMatrix(n, k_target);
    state.r_mat = TallMatrix(n, k_target);
    state.dx_norms.resize(k_target);
    for (std::size_t j = 0; j < k_target; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            state.x_mat.at(i, j) = x_diffs[j][i];
            state.r_mat.at(i, j) = r_diffs[j][i];
        }
        state.dx_norms[j] = norm2(x_diffs[j]);
    }
    return state;
}

struct DeskTrialResult {
    bool premise_ok = false;    // constructed perturbations satisfy the bound
    bool conclusion_ok = false; // measured quantity within the guaranteed bound
    double measured = 0.0;
    double bound = 0.0;
};

namespace detail {

/// Rank-one per-column perturbations E_i = target_i * u_i v_i^T have
/// exactly known 2-norms, which makes the premise check exact. Returns the
/// realized perturbation columns E_i * (i-th column of R).
inline TallMatrix realize_perturbation(const TallMatrix& r_mat,
                                       const std::vector<Vector>& u, const std::vector<Vector>& v,
                                       const std::vector<double>& targets) {
    TallMatrix e(r_mat.n_rows, r_mat.n_cols);
    for (std::size_t j = 0; j < r_mat.n_cols; ++j) {
        double dp = 0.0;
        for (std::size_t i = 0; i < r_mat.n_rows; ++i) dp += v[j][i] * r_mat.at(i, j);
        for (std::size_t i = 0; i < r_mat.n_rows; ++i)
            e.at(i, j) = targets[j] * u[j][i] * dp;
    }
    return e;
}

inline Vector random_unit(std::size_t n, Rng& rng) {
    Vector v(n);
    double nv = 0.0;
    while (nv == 0.0) {
        for (double& x : v) x = rng.normal();
        nv = norm2(v);
    }
    scale(v, 1.0 / nv);
    return v;
}

/// Shared core of the two perturbed-bound trials. rhs_factor is 1 for the
/// LHS-only bound and 1/(1+eps) when the right-hand side is perturbed too.
struct PerturbedTrialData {
    bool ok = false;
    TallMatrix r_hat;
    TallMatrix e_realized;
    std::vector<double> targets;
    double sigma_min_hat = 0.0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
};

inline PerturbedTrialData build_bounded_perturbation(const DeskState& state, double eps,
                                                     double rhs_factor, Rng& rng) {
    PerturbedTrialData data;
    const std::size_t k = state.k;
    const QrFactors f = qr_column_pivoting(state.r_mat);
    const auto [smin, smax] = singular_extremes(f.t);
    data.sigma_min = smin;
    data.sigma_max = smax;
    if (!(smin > 1e-12 * smax)) return data; // degenerate history, skip trial

    std::vector<Vector> u(k), v(k);
    for (std::size_t j = 0; j < k; ++j) {
        u[j] = random_unit(state.r_mat.n_rows, rng);
        v[j] = random_unit(state.r_mat.n_rows, rng);
    }
    data.targets.resize(k);
    for (std::size_t j = 0; j < k; ++j)
        data.targets[j] = 0.5 * (smin / static_cast<double>(k)) * eps * rhs_factor /
                          (state.r_norm * state.dx_norms[j]);

    for (int attempt = 0; attempt < 60; ++attempt) {
        data.e_realized = realize_perturbation(state.r_mat, u, v, data.targets);
        data.r_hat = state.r_mat;
        for (std::size_t i = 0; i < data.r_hat.values.size(); ++i)
            data.r_hat.values[i] += data.e_realized.values[i];
        const QrFactors fh = qr_column_pivoting(data.r_hat);
        data.sigma_min_hat = min_singular_upper_triangular(fh.t);
        bool premise = true;
        for (std::size_t j = 0; j < k; ++j) {
            const double allowed = (data.sigma_min_hat / static_cast<double>(k)) * eps *
                                   rhs_factor / (state.r_norm * state.dx_norms[j]);
            if (data.targets[j] > allowed) premise = false;
        }
        if (premise) {
            data.ok = true;
            return data;
        }
        for (double& t : data.targets) t *= 0.5;
    }
    return data;
}

} // namespace detail

/// Perturbed-LHS bound: perturbations below the per-column threshold keep
/// the backward error within eps * ||A||_2.
inline DeskTrialResult lhs_bound_trial(Rng& rng) {
    const std::size_t z = 1 + rng.uniform_index(2);
    DeskState state = make_desk_state(rng, 20, 200, 3, z, false);
    const double eps = std::pow(10.0, rng.uniform(-6.0, -1.0));

    DeskTrialResult out;
    auto data = detail::build_bounded_perturbation(state, eps, 1.0, rng);
    if (!data.ok) return out;
    out.premise_ok = true;

    const Vector g = least_squares_solve(data.r_hat, state.r);
    out.measured = backward_error_delta(data.e_realized, g);
    out.bound = eps * state.a_norm;
    out.conclusion_ok = out.measured <= out.bound;
    return out;
}

/// Perturbed LHS + RHS bound: with ||dr|| <= eps ||r^k|| and the tightened
/// per-column threshold, the backward error stays within
/// eps * max(||A||_2, ||r^k||_2).
inline DeskTrialResult rhs_bound_trial(Rng& rng) {
    const std::size_t z = 1 + rng.uniform_index(2);
    DeskState state = make_desk_state(rng, 20, 200, 3, z, false);
    const double eps = std::pow(10.0, rng.uniform(-6.0, -1.0));

    DeskTrialResult out;
    auto data = detail::build_bounded_perturbation(state, eps, 1.0 / (1.0 + eps), rng);
    if (!data.ok) return out;
    out.premise_ok = true;

    Vector dr = detail::random_unit(state.r.size(), rng);
    scale(dr, 0.9 * eps * state.r_norm);
    Vector rhs = state.r;
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += dr[i];

    const Vector g = least_squares_solve(data.r_hat, rhs);
    out.measured = backward_error_delta(data.e_realized, g);
    out.bound = eps * std::max(state.a_norm, state.r_norm);
    out.conclusion_ok = out.measured <= out.bound;
    return out;
}

/// Residual-deviation bound: the distance between the next residuals of
/// the exact and perturbed Anderson updates stays within
/// ||I - omega A||_2 (sqrt(2) kappa + kappa_hat) eps * max(||A||, ||r^k||).
inline DeskTrialResult residual_deviation_trial(Rng& rng) {
    const std::size_t z = 1 + rng.uniform_index(2);
    DeskState state = make_desk_state(rng, 20, 100, 3, z, true);
    const double eps = std::pow(10.0, rng.uniform(-6.0, -1.0));

    DeskTrialResult out;
    auto data = detail::build_bounded_perturbation(state, eps, 1.0 / (1.0 + eps), rng);
    if (!data.ok) return out;
    out.premise_ok = true;

    Vector dr = detail::random_unit(state.r.size(), rng);
    scale(dr, 0.9 * eps * state.r_norm);
    Vector rhs_hat = state.r;
    for (std::size_t i = 0; i < rhs_hat.size(); ++i) rhs_hat[i] += dr[i];

    const auto advance = [&](const Vector& g) {
        Vector x_bar = state.x;
        const Vector xg = multiply(state.x_mat, g);
        for (std::size_t i = 0; i < x_bar.size(); ++i) x_bar[i] -= xg[i];
        const Vector r_bar = residual(state.a, state.b, x_bar);
        const Vector x_next = richardson_step(x_bar, r_bar, state.omega);
        return residual(state.a, state.b, x_next);
    };

    const Vector g_exact = least_squares_solve(state.r_mat, state.r);
    const Vector g_hat = least_squares_solve(data.r_hat, rhs_hat);
    const Vector r_next = advance(g_exact);
    const Vector r_next_hat = advance(g_hat);

    const double kappa = data.sigma_max / data.sigma_min;
    const double kappa_hat = data.sigma_max / data.sigma_min_hat;
    const double eps_tilde = eps * std::max(state.a_norm, state.r_norm);

    out.measured = norm2(subtract(r_next_hat, r_next));
    out.bound = state.relaxation_norm * (std::sqrt(2.0) * kappa + kappa_hat) * eps_tilde;
    out.conclusion_ok = out.measured <= out.bound;
    return out;
}

} // namespace ank

#endif // ANDERSONKIT_PERTURB_HPP
