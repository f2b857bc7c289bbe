/// @file precond.hpp
/// @brief Left preconditioning pipeline: reverse Cuthill-McKee reordering,
///        diagonal scaling, ILU(0), and ILUT(tau) with column pivoting.
///
/// The preconditioned operator is composed lazily: solvers keep the original
/// matrix and call apply() on residuals, so M^{-1}A is never formed.

#ifndef ANDERSONKIT_PRECOND_HPP
#define ANDERSONKIT_PRECOND_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "andersonkit/sparse.hpp"

namespace ank {

class PrecondError : public std::runtime_error {
public:
    PrecondError(const std::string& what, std::size_t row)
        : std::runtime_error(what + " (row " + std::to_string(row) + ")"), pivot_row(row) {}
    std::size_t pivot_row;
};

/// Incomplete factors plus the optional reordering/scaling they were built
/// under. lower is unit lower triangular (unit diagonal stored explicitly);
/// upper has a nonzero diagonal by construction.
struct Preconditioner {
    SparseMatrix lower;
    SparseMatrix upper;
    std::vector<std::size_t> row_permutation; // perm[new] = old; empty = identity
    std::vector<std::size_t> col_permutation; // ILUT pivots, step -> column; empty = identity
    Vector row_scaling;                       // divisors; empty = none

    Vector apply(const Vector& v) const;
};

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee
// ---------------------------------------------------------------------------

/// RCM ordering on the symmetrized pattern of A: BFS from a
/// pseudo-peripheral vertex (double-BFS start heuristic), neighbors visited
/// by increasing degree, full ordering reversed. Returns perm[new] = old.
/// Disconnected graphs are handled component by component.
inline std::vector<std::size_t> rcm_ordering(const SparseMatrix& a) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("rcm_ordering: not square");
    const std::size_t n = a.n_rows;

    // symmetrized adjacency, no self loops
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            const std::size_t j = a.col_indices[k];
            if (i == j) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& nb : adj) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }

    std::vector<int> level(n);
    auto bfs_levels = [&](std::size_t start, std::vector<std::size_t>& last_level) {
        std::fill(level.begin(), level.end(), -1);
        std::queue<std::size_t> q;
        q.push(start);
        level[start] = 0;
        int max_level = 0;
        last_level.clear();
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop();
            if (level[v] > max_level) {
                max_level = level[v];
                last_level.clear();
            }
            if (level[v] == max_level) last_level.push_back(v);
            for (const std::size_t w : adj[v])
                if (level[w] < 0) {
                    level[w] = level[v] + 1;
                    q.push(w);
                }
        }
        return max_level;
    };

    std::vector<bool> visited(n, false);
    std::vector<std::size_t> order;
    order.reserve(n);

    for (std::size_t seed = 0; seed < n; ++seed) {
        if (visited[seed]) continue;

        // component start: minimum-degree vertex reachable from seed
        std::vector<std::size_t> component;
        {
            std::queue<std::size_t> q;
            std::vector<bool> seen(n, false);
            q.push(seed);
            seen[seed] = true;
            while (!q.empty()) {
                const std::size_t v = q.front();
                q.pop();
                component.push_back(v);
                for (const std::size_t w : adj[v])
                    if (!seen[w]) {
                        seen[w] = true;
                        q.push(w);
                    }
            }
        }
        std::size_t start = component[0];
        for (const std::size_t v : component)
            if (adj[v].size() < adj[start].size()) start = v;

        // pseudo-peripheral vertex by repeated BFS to the farthest level
        std::vector<std::size_t> last_level;
        int ecc = bfs_levels(start, last_level);
        for (;;) {
            std::size_t cand = last_level[0];
            for (const std::size_t v : last_level)
                if (adj[v].size() < adj[cand].size()) cand = v;
            std::vector<std::size_t> next_last;
            const int ecc2 = bfs_levels(cand, next_last);
            if (ecc2 > ecc) {
                ecc = ecc2;
                start = cand;
                last_level = std::move(next_last);
            } else {
                break;
            }
        }

        // Cuthill-McKee traversal, neighbors by increasing degree
        std::queue<std::size_t> q;
        q.push(start);
        visited[start] = true;
        std::vector<std::size_t> nbrs;
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop();
            order.push_back(v);
            nbrs.clear();
            for (const std::size_t w : adj[v])
                if (!visited[w]) nbrs.push_back(w);
            std::sort(nbrs.begin(), nbrs.end(), [&](std::size_t x, std::size_t y) {
                return adj[x].size() != adj[y].size() ? adj[x].size() < adj[y].size() : x < y;
            });
            for (const std::size_t w : nbrs) {
                visited[w] = true;
                q.push(w);
            }
        }
    }

    std::reverse(order.begin(), order.end());
    return order;
}

// ---------------------------------------------------------------------------
// Diagonal scaling
// ---------------------------------------------------------------------------

/// Returns (D, D^{-1}A) with D = diag(A); zeros (or missing entries) on the
/// main diagonal are replaced by one, leaving those rows unscaled.
inline std::pair<Vector, SparseMatrix> diagonal_scaling(const SparseMatrix& a) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("diagonal_scaling: not square");
    Vector d(a.n_rows, 1.0);
    for (std::size_t i = 0; i < a.n_rows; ++i)
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            if (a.col_indices[k] == i && a.values[k] != 0.0) d[i] = a.values[k];

    SparseMatrix scaled = a;
    for (std::size_t i = 0; i < a.n_rows; ++i)
        for (std::size_t k = scaled.row_offsets[i]; k < scaled.row_offsets[i + 1]; ++k)
            scaled.values[k] /= d[i];
    return {std::move(d), std::move(scaled)};
}

// ---------------------------------------------------------------------------
// ILU(0)
// ---------------------------------------------------------------------------

/// Zero fill-in incomplete LU: L and U share A's sparsity pattern exactly
/// (IKJ elimination restricted to that pattern). Requires a structural
/// diagonal in every row; a zero pivot raises PrecondError with the row so
/// the caller can reorder or scale and retry.
inline Preconditioner ilu0(const SparseMatrix& a) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("ilu0: not square");
    const std::size_t n = a.n_rows;
    std::vector<double> lu = a.values;
    std::vector<std::size_t> diag_pos(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            if (a.col_indices[k] == i) diag_pos[i] = k;
        if (diag_pos[i] == std::numeric_limits<std::size_t>::max())
            throw PrecondError("ilu0: missing structural diagonal", i);
    }

    auto find_in_row = [&](std::size_t row, std::size_t col) -> std::size_t {
        const auto begin = a.col_indices.begin() + static_cast<std::ptrdiff_t>(a.row_offsets[row]);
        const auto end = a.col_indices.begin() + static_cast<std::ptrdiff_t>(a.row_offsets[row + 1]);
        const auto it = std::lower_bound(begin, end, col);
        if (it != end && *it == col)
            return static_cast<std::size_t>(it - a.col_indices.begin());
        return std::numeric_limits<std::size_t>::max();
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t pos = a.row_offsets[i]; pos < a.row_offsets[i + 1]; ++pos) {
            const std::size_t k = a.col_indices[pos];
            if (k >= i) break;
            const double pivot = lu[diag_pos[k]];
            if (pivot == 0.0) throw PrecondError("ilu0: zero pivot", k);
            const double factor = lu[pos] / pivot;
            lu[pos] = factor;
            for (std::size_t kk = diag_pos[k] + 1; kk < a.row_offsets[k + 1]; ++kk) {
                const std::size_t target = find_in_row(i, a.col_indices[kk]);
                if (target != std::numeric_limits<std::size_t>::max())
                    lu[target] -= factor * lu[kk];
            }
        }
        if (lu[diag_pos[i]] == 0.0) throw PrecondError("ilu0: zero pivot", i);
    }

    Preconditioner p;
    std::vector<Triplet> lt, ut;
    for (std::size_t i = 0; i < n; ++i) {
        lt.push_back({i, i, 1.0});
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            const std::size_t j = a.col_indices[k];
            if (j < i)
                lt.push_back({i, j, lu[k]});
            else
                ut.push_back({i, j, lu[k]});
        }
    }
    p.lower = from_triplets(n, n, std::move(lt));
    p.upper = from_triplets(n, n, std::move(ut));
    return p;
}

// ---------------------------------------------------------------------------
// ILUT(tau) with column pivoting
// ---------------------------------------------------------------------------

/// Row-wise threshold ILU. Entries below tau times the 2-norm of the row
/// being processed are dropped, the pivot is the maximum-magnitude entry
/// among not-yet-pivoted columns, and a vanishing pivot is replaced by the
/// local tolerance. The resulting factors satisfy L*U ~ A*Pc with Pc the
/// recorded column permutation.
inline Preconditioner ilut(const SparseMatrix& a, double tau) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("ilut: not square");
    if (tau <= 0.0) throw std::invalid_argument("ilut: tau must be positive");
    const std::size_t n = a.n_rows;
    constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::vector<std::size_t> pivot_col(n, npos);  // step -> original column
    std::vector<std::size_t> col_step(n, npos);   // original column -> step
    std::vector<double> u_diag(n, 0.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> u_rows(n); // (orig col, value)
    std::vector<std::vector<std::pair<std::size_t, double>>> l_rows(n); // (step, value)

    std::vector<double> w(n, 0.0);
    std::vector<bool> present(n, false);
    std::vector<std::size_t> pattern;

    for (std::size_t i = 0; i < n; ++i) {
        pattern.clear();
        double rownorm2 = 0.0;
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            const std::size_t c = a.col_indices[k];
            w[c] = a.values[k];
            present[c] = true;
            pattern.push_back(c);
            rownorm2 += a.values[k] * a.values[k];
        }
        if (rownorm2 == 0.0) throw PrecondError("ilut: empty row, singular beyond repair", i);
        const double droptol = tau * std::sqrt(rownorm2);

        // eliminate against earlier pivots in increasing step order;
        // fill introduced at already-pivoted columns re-enters the heap
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> heap;
        for (const std::size_t c : pattern)
            if (col_step[c] != npos) heap.push(col_step[c]);
        while (!heap.empty()) {
            const std::size_t s = heap.top();
            heap.pop();
            while (!heap.empty() && heap.top() == s) heap.pop(); // duplicates
            const std::size_t c = pivot_col[s];
            const double val = w[c];
            if (val == 0.0) continue;
            const double factor = val / u_diag[s];
            if (std::abs(factor) < droptol) {
                w[c] = 0.0;
                continue;
            }
            w[c] = factor;
            for (const auto& [c2, uval] : u_rows[s]) {
                if (!present[c2]) {
                    present[c2] = true;
                    pattern.push_back(c2);
                    w[c2] = 0.0;
                    if (col_step[c2] != npos) heap.push(col_step[c2]);
                }
                w[c2] -= factor * uval;
            }
        }

        // pivot: maximum magnitude among unpivoted columns, before dropping
        std::size_t piv = npos;
        double piv_mag = -1.0;
        for (const std::size_t c : pattern) {
            if (col_step[c] != npos) continue;
            const double mag = std::abs(w[c]);
            if (mag > piv_mag || (mag == piv_mag && piv != npos && c < piv)) {
                piv_mag = mag;
                piv = c;
            }
        }
        double piv_val;
        if (piv == npos || piv_mag == 0.0) {
            // no usable pivot value: take the first free column and replace
            // the zero diagonal by the local tolerance
            if (piv == npos) {
                for (std::size_t c = 0; c < n; ++c)
                    if (col_step[c] == npos) {
                        piv = c;
                        break;
                    }
            }
            piv_val = droptol;
        } else {
            piv_val = w[piv];
        }

        pivot_col[i] = piv;
        col_step[piv] = i;
        u_diag[i] = piv_val;

        for (const std::size_t c : pattern) {
            const double val = w[c];
            w[c] = 0.0;
            present[c] = false;
            if (val == 0.0 || c == piv) continue;
            const std::size_t s = col_step[c];
            if (s != npos && s < i) {
                l_rows[i].push_back({s, val}); // eliminated factor
            } else if (s == npos) {
                if (std::abs(val) >= droptol) u_rows[i].push_back({c, val});
            }
        }
    }

    Preconditioner p;
    std::vector<Triplet> lt, ut;
    for (std::size_t i = 0; i < n; ++i) {
        lt.push_back({i, i, 1.0});
        for (const auto& [s, v] : l_rows[i]) lt.push_back({i, s, v});
        ut.push_back({i, i, u_diag[i]});
        for (const auto& [c, v] : u_rows[i]) ut.push_back({i, col_step[c], v});
    }
    p.lower = from_triplets(n, n, std::move(lt));
    p.upper = from_triplets(n, n, std::move(ut));
    p.col_permutation = std::move(pivot_col);
    return p;
}

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

/// w = M^{-1} v: scale, permute into factor space, forward/backward
/// triangular solves, undo the pivot and row permutations.
inline Vector Preconditioner::apply(const Vector& v) const {
    const std::size_t n = lower.n_rows;
    if (v.size() != n) throw std::invalid_argument("precond apply: dimension mismatch");

    Vector work = v;
    if (!row_scaling.empty())
        for (std::size_t i = 0; i < n; ++i) work[i] /= row_scaling[i];
    if (!row_permutation.empty()) {
        Vector tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = work[row_permutation[i]];
        work = std::move(tmp);
    }

    // L y = work (unit lower triangular)
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = work[i];
        for (std::size_t k = lower.row_offsets[i]; k < lower.row_offsets[i + 1]; ++k) {
            const std::size_t j = lower.col_indices[k];
            if (j < i) s -= lower.values[k] * y[j];
        }
        y[i] = s;
    }
    // U z = y
    Vector z(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        double diag = 0.0;
        for (std::size_t k = upper.row_offsets[i]; k < upper.row_offsets[i + 1]; ++k) {
            const std::size_t j = upper.col_indices[k];
            if (j == i)
                diag = upper.values[k];
            else if (j > i)
                s -= upper.values[k] * z[j];
        }
        if (diag == 0.0) throw PrecondError("precond apply: zero diagonal in U", i);
        z[i] = s / diag;
    }

    if (!col_permutation.empty()) {
        Vector tmp(n);
        for (std::size_t s = 0; s < n; ++s) tmp[col_permutation[s]] = z[s];
        z = std::move(tmp);
    }
    if (!row_permutation.empty()) {
        Vector tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[row_permutation[i]] = z[i];
        z = std::move(tmp);
    }
    return z;
}

// ---------------------------------------------------------------------------
// Pipeline builder
// ---------------------------------------------------------------------------

enum class PrecondKind { none, ilu0, ilut };

struct PrecondOptions {
    PrecondKind kind = PrecondKind::none;
    double tau = 1e-4;      // ILUT drop threshold
    bool rcm = false;       // symmetric RCM reorder before factoring
    bool diag_scale = false; // divide rows by the diagonal before factoring
};

/// Scale, reorder, then factor. The returned object carries the scaling and
/// permutations so apply() works on vectors in the original ordering.
inline Preconditioner make_preconditioner(const SparseMatrix& a, const PrecondOptions& opt) {
    if (opt.kind == PrecondKind::none)
        throw std::invalid_argument("make_preconditioner: kind is none");
    SparseMatrix working = a;
    Vector scaling;
    if (opt.diag_scale) {
        auto [d, scaled] = diagonal_scaling(working);
        scaling = std::move(d);
        working = std::move(scaled);
    }
    std::vector<std::size_t> perm;
    if (opt.rcm) {
        perm = rcm_ordering(working);
        working = permute_symmetric(working, perm);
    }
    Preconditioner p = opt.kind == PrecondKind::ilu0 ? ilu0(working) : ilut(working, opt.tau);
    p.row_permutation = std::move(perm);
    p.row_scaling = std::move(scaling);
    return p;
}

} // namespace ank

#endif // ANDERSONKIT_PRECOND_HPP
