/// @file sparse.hpp
/// @brief CSR sparse matrix storage and the matrix-vector kernels the
///        solvers consume.
///
/// Matrices are real double precision only. Instances are immutable after
/// construction and safe to share across threads; all operations here are
/// pure functions.

#ifndef ANDERSONKIT_SPARSE_HPP
#define ANDERSONKIT_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "andersonkit/rng.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

/// Compressed sparse row matrix. Within each row the column indices are
/// strictly increasing and duplicates have been summed at build time.
struct SparseMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> row_offsets; // length n_rows + 1
    std::vector<std::size_t> col_indices;
    std::vector<double> values;

    std::size_t nnz() const { return values.size(); }
};

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Build CSR from an unordered triplet list. Duplicate (i,j) entries are
/// summed; rows end up with strictly increasing column indices.
inline SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                  std::vector<Triplet> entries) {
    for (const Triplet& t : entries) {
        if (t.row >= n_rows || t.col >= n_cols)
            throw std::out_of_range("from_triplets: index out of bounds");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.n_rows = n_rows;
    m.n_cols = n_cols;
    m.row_offsets.assign(n_rows + 1, 0);
    m.col_indices.reserve(entries.size());
    m.values.reserve(entries.size());

    for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i + 1;
        double sum = entries[i].value;
        while (j < entries.size() && entries[j].row == entries[i].row &&
               entries[j].col == entries[i].col) {
            sum += entries[j].value;
            ++j;
        }
        m.col_indices.push_back(entries[i].col);
        m.values.push_back(sum);
        ++m.row_offsets[entries[i].row + 1];
        i = j;
    }
    for (std::size_t r = 0; r < n_rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
    return m;
}

inline SparseMatrix identity_matrix(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
}

inline SparseMatrix diagonal_matrix(const Vector& d) {
    std::vector<Triplet> t;
    t.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
    return from_triplets(d.size(), d.size(), std::move(t));
}

/// y = A * x
inline Vector matvec(const SparseMatrix& a, const Vector& x) {
    if (x.size() != a.n_cols) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(a.n_rows, 0.0);
    for (std::size_t i = 0; i < a.n_rows; ++i) {
        double s = 0.0;
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            s += a.values[k] * x[a.col_indices[k]];
        y[i] = s;
    }
    return y;
}

/// y = A^T * x (scatter form)
inline Vector matvec_transpose(const SparseMatrix& a, const Vector& x) {
    if (x.size() != a.n_rows)
        throw std::invalid_argument("matvec_transpose: dimension mismatch");
    Vector y(a.n_cols, 0.0);
    for (std::size_t i = 0; i < a.n_rows; ++i)
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            y[a.col_indices[k]] += a.values[k] * x[i];
    return y;
}

/// r = b - A*x
inline Vector residual(const SparseMatrix& a, const Vector& b, const Vector& x) {
    if (b.size() != a.n_rows) throw std::invalid_argument("residual: rhs length mismatch");
    Vector r = matvec(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return r;
}

inline double frobenius_norm(const SparseMatrix& a) {
    double s = 0.0;
    for (const double v : a.values) s += v * v;
    return std::sqrt(s);
}

/// Estimate of ||A||_2 from a seeded random start: Lanczos on A^T A (one
/// operator application per iteration, full reorthogonalization), returning
/// the square root of the largest Ritz value. Ritz values over nested
/// Krylov subspaces make the estimate rigorously non-decreasing in
/// power_iters, and it never exceeds the true norm.
inline double estimate_two_norm(const SparseMatrix& a, std::size_t power_iters = 50,
                                std::uint64_t seed = 0) {
    if (power_iters < 1) throw std::invalid_argument("estimate_two_norm: power_iters < 1");
    if (a.nnz() == 0) return 0.0;
    const std::size_t steps = std::min(power_iters, a.n_cols);

    Rng rng = make_stream(seed, "sparse/two-norm");
    Vector v(a.n_cols);
    for (double& x : v) x = rng.normal();
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    scale(v, 1.0 / nv);

    std::vector<Vector> basis;
    basis.reserve(steps);
    basis.push_back(v);
    std::vector<double> alpha, beta;

    for (std::size_t j = 0; j < steps; ++j) {
        Vector w = matvec_transpose(a, matvec(a, basis[j]));
        alpha.push_back(dot(basis[j], w));
        for (std::size_t pass = 0; pass < 2; ++pass)
            for (const Vector& q : basis) axpy(-dot(w, q), q, w);
        const double b = norm2(w);
        if (b == 0.0 || j + 1 == steps) break; // invariant subspace or budget
        beta.push_back(b);
        scale(w, 1.0 / b);
        basis.push_back(std::move(w));
    }

    const std::size_t k = alpha.size();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                              static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = alpha[i];
        if (i + 1 < k) {
            t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = beta[i];
            t(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = beta[i];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t, Eigen::EigenvaluesOnly);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    return lambda_max > 0.0 ? std::sqrt(lambda_max) : 0.0;
}

/// Symmetric permutation B[i][j] = A[perm[i]][perm[j]], perm[new] = old.
inline SparseMatrix permute_symmetric(const SparseMatrix& a,
                                      const std::vector<std::size_t>& perm) {
    if (a.n_rows != a.n_cols) throw std::invalid_argument("permute_symmetric: not square");
    if (perm.size() != a.n_rows)
        throw std::invalid_argument("permute_symmetric: permutation length mismatch");
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;

    std::vector<Triplet> t;
    t.reserve(a.nnz());
    for (std::size_t newr = 0; newr < a.n_rows; ++newr) {
        const std::size_t oldr = perm[newr];
        for (std::size_t k = a.row_offsets[oldr]; k < a.row_offsets[oldr + 1]; ++k)
            t.push_back({newr, inv[a.col_indices[k]], a.values[k]});
    }
    return from_triplets(a.n_rows, a.n_cols, std::move(t));
}

} // namespace ank

#endif // ANDERSONKIT_SPARSE_HPP
