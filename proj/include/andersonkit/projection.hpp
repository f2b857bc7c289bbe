/// @file projection.hpp
/// @brief Row-selection projections that shrink the Anderson least-squares
///        problem to s selected rows.

#ifndef ANDERSONKIT_PROJECTION_HPP
#define ANDERSONKIT_PROJECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "andersonkit/dense_qr.hpp"
#include "andersonkit/rng.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

enum class ProjectionStrategy { none, subselect, randomized };

inline const char* to_string(ProjectionStrategy s) {
    switch (s) {
        case ProjectionStrategy::none: return "none";
        case ProjectionStrategy::subselect: return "subselect";
        case ProjectionStrategy::randomized: return "randomized";
    }
    return "unknown";
}

/// Row-selection state for one solve: the strategy, the current reduced
/// dimension s (grows in batches, never shrinks), and the batch granularity.
struct ProjectionPlan {
    ProjectionStrategy strategy = ProjectionStrategy::none;
    std::size_t s_current = 0;
    double batch_fraction = 0.1;  // in (0, 1]
    std::uint64_t seed = 0;       // row-selection stream seed

    std::size_t batch_size(std::size_t n) const {
        const std::size_t b =
            static_cast<std::size_t>(std::ceil(batch_fraction * static_cast<double>(n)));
        return b > 0 ? b : 1;
    }

    void validate(std::size_t n) const {
        if (strategy == ProjectionStrategy::none) return;
        if (s_current < 1 || s_current > n)
            throw std::invalid_argument("ProjectionPlan: s_current out of range");
        if (!(batch_fraction > 0.0) || batch_fraction > 1.0)
            throw std::invalid_argument("ProjectionPlan: batch_fraction out of (0,1]");
    }
};

/// Plan starting at one batch (default 10% of n).
inline ProjectionPlan default_plan(std::size_t n, ProjectionStrategy strategy,
                                   double batch_fraction = 0.1, std::uint64_t seed = 0) {
    ProjectionPlan p;
    p.strategy = strategy;
    p.batch_fraction = batch_fraction;
    p.s_current = p.batch_size(n);
    p.seed = seed;
    return p;
}

/// Indices of the s largest-magnitude residual entries, ties broken by
/// lower index; output sorted ascending.
inline std::vector<std::size_t> select_rows_subselect(const Vector& r, std::size_t s) {
    const std::size_t n = r.size();
    if (s < 1 || s > n) throw std::invalid_argument("select_rows_subselect: s out of range");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const auto larger = [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(r[a]);
        const double mb = std::abs(r[b]);
        return ma != mb ? ma > mb : a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s - 1), idx.end(),
                     larger);
    idx.resize(s);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// s distinct indices drawn uniformly without replacement; sorted ascending
/// and deterministic for a given generator state.
inline std::vector<std::size_t> select_rows_random(std::size_t n, std::size_t s, Rng& rng) {
    if (s < 1 || s > n) throw std::invalid_argument("select_rows_random: s out of range");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(s);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// The reduced least-squares data: selected rows of R_k and r_k, plus the
/// norm of the discarded residual part (the realized RHS perturbation).
struct ProjectedLs {
    TallMatrix m;
    Vector rhs;
    double delta_r_norm = 0.0;
};

/// Restriction of (R_k, r_k) to the given rows (distinct, ascending).
inline ProjectedLs project_ls(const TallMatrix& r_k, const Vector& rhs,
                              const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw std::invalid_argument("project_ls: empty selection");
    if (rhs.size() != r_k.n_rows) throw std::invalid_argument("project_ls: rhs size mismatch");

    ProjectedLs out;
    out.m = TallMatrix(rows.size(), r_k.n_cols);
    out.rhs.resize(rows.size());
    for (std::size_t j = 0; j < r_k.n_cols; ++j) {
        const double* src = r_k.col(j);
        double* dst = out.m.col(j);
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    }
    double unselected2 = 0.0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        if (next < rows.size() && rows[next] == i) {
            out.rhs[next] = rhs[i];
            ++next;
        } else {
            unselected2 += rhs[i] * rhs[i];
        }
    }
    out.delta_r_norm = std::sqrt(unselected2);
    return out;
}

/// Per-column restriction defect: (norm of the unselected part, full column
/// norm) for each history column. The ratio is the computable stand-in for
/// the per-column perturbation magnitude the accuracy bounds constrain.
inline std::vector<std::pair<double, double>> column_restriction_defects(
    const TallMatrix& r_k, const std::vector<std::size_t>& rows) {
    std::vector<std::pair<double, double>> out(r_k.n_cols);
    std::vector<bool> selected(r_k.n_rows, false);
    for (const std::size_t i : rows) selected[i] = true;
    for (std::size_t j = 0; j < r_k.n_cols; ++j) {
        const double* c = r_k.col(j);
        double total2 = 0.0, unsel2 = 0.0;
        for (std::size_t i = 0; i < r_k.n_rows; ++i) {
            total2 += c[i] * c[i];
            if (!selected[i]) unsel2 += c[i] * c[i];
        }
        out[j] = {std::sqrt(unsel2), std::sqrt(total2)};
    }
    return out;
}

} // namespace ank

#endif // ANDERSONKIT_PROJECTION_HPP
