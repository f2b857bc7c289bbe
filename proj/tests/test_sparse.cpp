#include <gtest/gtest.h>

#include <sstream>

#include "andersonkit/matrix_market.hpp"
#include "andersonkit/sparse.hpp"
#include "support/test_support.hpp"

using namespace ank;
namespace tt = ank::testing;

namespace {

SparseMatrix parse(const std::string& text) {
    std::istringstream in(text);
    return parse_matrix_market(in);
}

} // namespace

TEST(MatrixMarket, DiagonalCase) {
    const SparseMatrix a = parse(
        "%%MatrixMarket matrix coordinate real general\n"
        "2 2 2\n"
        "1 1 3.0\n"
        "2 2 4.0\n");
    ASSERT_EQ(a.n_rows, 2u);
    ASSERT_EQ(a.nnz(), 2u);
    const auto d = tt::to_dense(a);
    EXPECT_EQ(d[0][0], 3.0);
    EXPECT_EQ(d[1][1], 4.0);
    EXPECT_EQ(d[0][1], 0.0);
}

TEST(MatrixMarket, SymmetryExpansion) {
    const SparseMatrix a = parse(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "2 2 1\n"
        "2 1 5.0\n");
    const auto d = tt::to_dense(a);
    EXPECT_EQ(d[1][0], 5.0);
    EXPECT_EQ(d[0][1], 5.0);
    EXPECT_EQ(a.nnz(), 2u);
}

TEST(MatrixMarket, SkewSymmetryExpansion) {
    const SparseMatrix a = parse(
        "%%MatrixMarket matrix coordinate real skew-symmetric\n"
        "3 3 1\n"
        "3 1 2.5\n");
    const auto d = tt::to_dense(a);
    EXPECT_EQ(d[2][0], 2.5);
    EXPECT_EQ(d[0][2], -2.5);
}

TEST(MatrixMarket, DuplicatesSummed) {
    const SparseMatrix a = parse(
        "%%MatrixMarket matrix coordinate real general\n"
        "2 2 3\n"
        "1 1 1.0\n"
        "1 1 2.5\n"
        "2 1 -1.0\n");
    const auto d = tt::to_dense(a);
    EXPECT_EQ(d[0][0], 3.5);
    EXPECT_EQ(a.nnz(), 2u);
}

TEST(MatrixMarket, IntegerFieldAndComments) {
    const SparseMatrix a = parse(
        "%%MatrixMarket matrix coordinate integer general\n"
        "% comment line\n"
        "2 2 1\n"
        "% another\n"
        "1 2 7\n");
    EXPECT_EQ(tt::to_dense(a)[0][1], 7.0);
}

TEST(MatrixMarket, RejectsUnsupportedFields) {
    EXPECT_THROW(parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
                 MatrixMarketError);
    EXPECT_THROW(parse("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n"),
                 MatrixMarketError);
    EXPECT_THROW(parse("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"),
                 MatrixMarketError);
    EXPECT_THROW(parse("not a header\n1 1 1\n1 1 1\n"), MatrixMarketError);
}

TEST(MatrixMarket, RejectsOutOfBoundsIndex) {
    try {
        parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
        FAIL() << "expected MatrixMarketError";
    } catch (const MatrixMarketError& e) {
        EXPECT_EQ(e.line_number, 3u);
    }
}

TEST(MatrixMarket, ParseRoundTripsThroughDense) {
    // well-formed random files reconstruct exactly entry by entry
    Rng rng(1234);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + rng.uniform_index(12);
        const SparseMatrix a = tt::random_sparse(n, 0.3, 2.0, rng);
        std::ostringstream out;
        write_matrix_market(out, a);
        const SparseMatrix back = parse(out.str());
        ASSERT_EQ(back.n_rows, a.n_rows);
        ASSERT_EQ(back.nnz(), a.nnz());
        const auto da = tt::to_dense(a);
        const auto db = tt::to_dense(back);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(da[i][j], db[i][j]);
    }
}

TEST(Matvec, Identity) {
    const SparseMatrix eye = identity_matrix(3);
    const Vector x = {1.0, 2.0, 3.0};
    EXPECT_EQ(matvec(eye, x), x);
}

TEST(Matvec, DiagonalTestMatrixFirstColumn) {
    Vector d(100);
    d[0] = 1e-4;
    for (std::size_t i = 1; i < 100; ++i) d[i] = static_cast<double>(i + 1);
    const SparseMatrix a = diagonal_matrix(d);
    Vector e1(100, 0.0);
    e1[0] = 1.0;
    const Vector y = matvec(a, e1);
    EXPECT_EQ(y[0], 1e-4);
    for (std::size_t i = 1; i < 100; ++i) EXPECT_EQ(y[i], 0.0);
}

TEST(Matvec, MatchesDenseTripleLoop) {
    Rng rng(77);
    const SparseMatrix a = tt::random_sparse(5, 0.5, 0.0, rng);
    const Vector x = tt::random_vector(5, rng);
    const Vector y = matvec(a, x);
    const Vector oracle = tt::dense_matvec(tt::to_dense(a), x);
    for (std::size_t i = 0; i < 5; ++i)
        EXPECT_NEAR(y[i], oracle[i], 1e-14 * std::max(1.0, std::abs(oracle[i])));
}

TEST(Matvec, DimensionMismatchThrows) {
    const SparseMatrix eye = identity_matrix(3);
    EXPECT_THROW(matvec(eye, Vector(4, 0.0)), std::invalid_argument);
}

TEST(Matvec, Linearity) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(20);
        const SparseMatrix a = tt::random_sparse(n, 0.4, 1.0, rng);
        const Vector x = tt::random_vector(n, rng);
        const Vector y = tt::random_vector(n, rng);
        const double alpha = rng.uniform(-2.0, 2.0);
        const double beta = rng.uniform(-2.0, 2.0);
        Vector combo(n);
        for (std::size_t i = 0; i < n; ++i) combo[i] = alpha * x[i] + beta * y[i];
        const Vector lhs = matvec(a, combo);
        const Vector ax = matvec(a, x);
        const Vector ay = matvec(a, y);
        double scale_ref = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            scale_ref = std::max({scale_ref, std::abs(lhs[i])});
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(lhs[i], alpha * ax[i] + beta * ay[i],
                        1e-13 * std::max(1.0, scale_ref));
    }
}

TEST(Residual, ExactSolutionGivesZero) {
    const SparseMatrix eye = identity_matrix(4);
    const Vector b = {1.0, -2.0, 0.5, 3.0};
    const Vector r = residual(eye, b, b);
    for (const double v : r) EXPECT_EQ(v, 0.0);
}

TEST(Residual, ZeroIterateGivesRhs) {
    Rng rng(9);
    const SparseMatrix a = tt::random_sparse(6, 0.5, 2.0, rng);
    const Vector b = tt::random_vector(6, rng);
    EXPECT_EQ(residual(a, b, Vector(6, 0.0)), b);
}

TEST(Residual, PerturbedSolutionMatchesDenseOracle) {
    Rng rng(11);
    const SparseMatrix a = tt::random_sparse(3, 1.0, 3.0, rng);
    const Vector x_star = tt::random_vector(3, rng);
    const Vector b = matvec(a, x_star);
    Vector x = x_star;
    x[0] += 1.0; // perturb along e_1
    const Vector r = residual(a, b, x);
    Vector e1 = {1.0, 0.0, 0.0};
    const Vector oracle = tt::dense_matvec(tt::to_dense(a), e1);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r[i], -oracle[i], 1e-12);
}

TEST(EstimateTwoNorm, DiagonalMatrixWithinOnePercent) {
    Vector d(100);
    d[0] = 1e-4;
    for (std::size_t i = 1; i < 100; ++i) d[i] = static_cast<double>(i + 1);
    const SparseMatrix a = diagonal_matrix(d);
    const double est = estimate_two_norm(a, 50, 42);
    EXPECT_NEAR(est, 100.0, 1.0);
}

TEST(EstimateTwoNorm, IdentityExact) {
    const SparseMatrix eye = identity_matrix(10);
    EXPECT_DOUBLE_EQ(estimate_two_norm(eye, 50, 1), 1.0);
}

TEST(EstimateTwoNorm, NilpotentJordanBlock) {
    const SparseMatrix a = from_triplets(2, 2, {{0, 1, 1.0}});
    EXPECT_NEAR(estimate_two_norm(a, 50, 3), 1.0, 1e-6);
}

TEST(EstimateTwoNorm, ZeroMatrixGivesZero) {
    const SparseMatrix a = from_triplets(3, 3, {});
    EXPECT_EQ(estimate_two_norm(a, 10, 0), 0.0);
}

TEST(EstimateTwoNorm, BoundedByFrobeniusAndColumnNorms) {
    Rng rng(2024);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(30);
        const SparseMatrix a = tt::random_sparse(n, 0.3, 1.0, rng);
        const double est = estimate_two_norm(a, 50, trial);
        EXPECT_LE(est, frobenius_norm(a) * (1.0 + 1e-12));
        double max_col2 = 0.0;
        const auto d = tt::to_dense(a);
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += d[i][j] * d[i][j];
            max_col2 = std::max(max_col2, std::sqrt(s));
        }
        EXPECT_GE(est, max_col2 / std::sqrt(static_cast<double>(n)) * (1.0 - 1e-12));
    }
}

TEST(EstimateTwoNorm, MonotoneInPowerIters) {
    Rng rng(31);
    const SparseMatrix a = tt::random_sparse(25, 0.3, 1.0, rng);
    double prev = 0.0;
    for (const std::size_t iters : {1u, 2u, 5u, 10u, 25u, 50u}) {
        const double est = estimate_two_norm(a, iters, 7);
        EXPECT_GE(est, prev * (1.0 - 1e-13));
        prev = est;
    }
}
