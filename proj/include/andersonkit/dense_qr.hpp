/// @file dense_qr.hpp
/// @brief Dense tall-skinny least-squares kernels: Householder QR with
///        column pivoting and the rank-truncated solve behind every
///        Anderson mixing step.

#ifndef ANDERSONKIT_DENSE_QR_HPP
#define ANDERSONKIT_DENSE_QR_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "andersonkit/vector_ops.hpp"

namespace ank {

/// Column-major dense matrix with few columns (at most the history cap).
struct TallMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values; // column-major, n_rows * n_cols

    TallMatrix() = default;
    TallMatrix(std::size_t rows, std::size_t cols)
        : n_rows(rows), n_cols(cols), values(rows * cols, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return values[j * n_rows + i]; }
    double at(std::size_t i, std::size_t j) const { return values[j * n_rows + i]; }
    double* col(std::size_t j) { return values.data() + j * n_rows; }
    const double* col(std::size_t j) const { return values.data() + j * n_rows; }
};

inline Vector multiply(const TallMatrix& m, const Vector& x) {
    if (x.size() != m.n_cols) throw std::invalid_argument("multiply: dimension mismatch");
    Vector y(m.n_rows, 0.0);
    for (std::size_t j = 0; j < m.n_cols; ++j) {
        const double* c = m.col(j);
        const double xj = x[j];
        for (std::size_t i = 0; i < m.n_rows; ++i) y[i] += c[i] * xj;
    }
    return y;
}

inline Vector multiply_transpose(const TallMatrix& m, const Vector& x) {
    if (x.size() != m.n_rows)
        throw std::invalid_argument("multiply_transpose: dimension mismatch");
    Vector y(m.n_cols, 0.0);
    for (std::size_t j = 0; j < m.n_cols; ++j) {
        const double* c = m.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < m.n_rows; ++i) s += c[i] * x[i];
        y[j] = s;
    }
    return y;
}

inline double frobenius_norm(const TallMatrix& m) {
    double s = 0.0;
    for (const double v : m.values) s += v * v;
    return std::sqrt(s);
}

/// Factorization M*P = Q*T with Q having orthonormal columns, T upper
/// triangular with |t[i,i]| non-increasing along the pivot order, and
/// column_permutation[j] giving the original index of pivoted column j.
struct QrFactors {
    TallMatrix q;                                // n x k, orthonormal columns
    TallMatrix t;                                // k x k, upper triangular
    std::vector<std::size_t> column_permutation; // perm[j] = original column
};

/// Householder QR with column pivoting by maximum remaining column norm
/// (exact norms recomputed each step; k is small). Rank deficiency shows up
/// as (near-)zero trailing diagonal entries of T rather than as an error.
inline QrFactors qr_column_pivoting(const TallMatrix& m) {
    if (m.n_cols == 0 || m.n_rows == 0)
        throw std::invalid_argument("qr_column_pivoting: empty matrix");
    if (m.n_rows < m.n_cols)
        throw std::invalid_argument("qr_column_pivoting: fewer rows than columns");

    const std::size_t n = m.n_rows;
    const std::size_t k = m.n_cols;
    TallMatrix a = m; // overwritten: T on/above diagonal, reflector tails below
    std::vector<std::size_t> perm(k);
    for (std::size_t j = 0; j < k; ++j) perm[j] = j;
    std::vector<double> tau(k, 0.0); // H = I - tau * v v^T with v[step] = 1

    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = step;
        double best_norm2 = -1.0;
        for (std::size_t j = step; j < k; ++j) {
            const double* c = a.col(j);
            double s = 0.0;
            for (std::size_t i = step; i < n; ++i) s += c[i] * c[i];
            if (s > best_norm2) {
                best_norm2 = s;
                best = j;
            }
        }
        if (best != step) {
            for (std::size_t i = 0; i < n; ++i) std::swap(a.at(i, step), a.at(i, best));
            std::swap(perm[step], perm[best]);
        }

        double* c = a.col(step);
        const double normx = std::sqrt(best_norm2 > 0.0 ? best_norm2 : 0.0);
        if (normx == 0.0) {
            tau[step] = 0.0;
            c[step] = 0.0; // exact zero diagonal for dependent columns
            continue;
        }
        const double alpha = c[step] >= 0.0 ? -normx : normx;
        const double head = c[step] - alpha;
        double vtv = head * head;
        for (std::size_t i = step + 1; i < n; ++i) vtv += c[i] * c[i];
        const double beta = vtv > 0.0 ? 2.0 / vtv : 0.0;

        for (std::size_t j = step + 1; j < k; ++j) {
            double* cj = a.col(j);
            double s = head * cj[step];
            for (std::size_t i = step + 1; i < n; ++i) s += c[i] * cj[i];
            s *= beta;
            cj[step] -= s * head;
            for (std::size_t i = step + 1; i < n; ++i) cj[i] -= s * c[i];
        }

        // store normalized tail (v[step] = 1 implicit) and the scaled tau
        for (std::size_t i = step + 1; i < n; ++i) c[i] /= head;
        tau[step] = beta * head * head;
        c[step] = alpha;
    }

    QrFactors f;
    f.column_permutation = std::move(perm);
    f.t = TallMatrix(k, k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i <= j; ++i) f.t.at(i, j) = a.at(i, j);

    // accumulate thin Q = H_0 ... H_{k-1} * [I_k; 0] in reverse order
    f.q = TallMatrix(n, k);
    for (std::size_t j = 0; j < k; ++j) f.q.at(j, j) = 1.0;
    for (std::size_t s = k; s-- > 0;) {
        if (tau[s] == 0.0) continue;
        const double* v = a.col(s);
        for (std::size_t j = 0; j < k; ++j) {
            double* qj = f.q.col(j);
            double dp = qj[s];
            for (std::size_t i = s + 1; i < n; ++i) dp += v[i] * qj[i];
            dp *= tau[s];
            qj[s] -= dp;
            for (std::size_t i = s + 1; i < n; ++i) qj[i] -= dp * v[i];
        }
    }
    return f;
}

/// Relative threshold below which a pivoted diagonal of T is treated as a
/// dependent history column and truncated out of the solution.
inline constexpr double kRankTruncationRel = 1e-14;

/// argmin ||M g - rhs||_2 via pivoted QR with rank truncation.
inline Vector least_squares_solve(const TallMatrix& m, const Vector& rhs) {
    if (rhs.size() != m.n_rows)
        throw std::invalid_argument("least_squares_solve: rhs length mismatch");
    const QrFactors f = qr_column_pivoting(m);
    const std::size_t k = m.n_cols;

    const double t00 = std::abs(f.t.at(0, 0));
    std::size_t rank = 0;
    while (rank < k && std::abs(f.t.at(rank, rank)) > kRankTruncationRel * t00) ++rank;

    const Vector c = multiply_transpose(f.q, rhs);
    Vector y(k, 0.0);
    for (std::size_t i = rank; i-- > 0;) {
        double s = c[i];
        for (std::size_t j = i + 1; j < rank; ++j) s -= f.t.at(i, j) * y[j];
        y[i] = s / f.t.at(i, i);
    }
    Vector g(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) g[f.column_permutation[j]] = y[j];
    return g;
}

/// Smallest singular value of a small upper-triangular block, by full SVD.
inline double min_singular_upper_triangular(const TallMatrix& t) {
    if (t.n_rows != t.n_cols)
        throw std::invalid_argument("min_singular_upper_triangular: not square");
    Eigen::MatrixXd e = Eigen::Map<const Eigen::MatrixXd>(
        t.values.data(), static_cast<Eigen::Index>(t.n_rows),
        static_cast<Eigen::Index>(t.n_cols));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(e);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

/// (sigma_min, sigma_max) of a small dense block, by full SVD.
inline std::pair<double, double> singular_extremes(const TallMatrix& t) {
    Eigen::MatrixXd e = Eigen::Map<const Eigen::MatrixXd>(
        t.values.data(), static_cast<Eigen::Index>(t.n_rows),
        static_cast<Eigen::Index>(t.n_cols));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(e);
    const auto& sv = svd.singularValues();
    return {sv(sv.size() - 1), sv(0)};
}

} // namespace ank

#endif // ANDERSONKIT_DENSE_QR_HPP
