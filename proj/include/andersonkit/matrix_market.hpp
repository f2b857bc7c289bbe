/// @file matrix_market.hpp
/// @brief Matrix Market coordinate-format ingestion (the only matrix input
///        format).
///
/// Accepts real and integer fields with general, symmetric, or
/// skew-symmetric storage. Symmetric/skew files are expanded to full
/// general CSR, 1-based indices become 0-based, and duplicate entries are
/// summed. Pattern and complex fields are rejected explicitly: the solver
/// stack is real-arithmetic only.

#ifndef ANDERSONKIT_MATRIX_MARKET_HPP
#define ANDERSONKIT_MATRIX_MARKET_HPP

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "andersonkit/sparse.hpp"

namespace ank {

class MatrixMarketError : public std::runtime_error {
public:
    MatrixMarketError(std::size_t line, const std::string& what)
        : std::runtime_error("matrix market, line " + std::to_string(line) + ": " + what),
          line_number(line) {}
    std::size_t line_number;
};

namespace detail {
inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}
} // namespace detail

inline SparseMatrix parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) throw MatrixMarketError(1, "empty stream");
    ++lineno;

    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw MatrixMarketError(lineno, "missing %%MatrixMarket banner");
    object = detail::lower(object);
    format = detail::lower(format);
    field = detail::lower(field);
    symmetry = detail::lower(symmetry);
    if (object != "matrix") throw MatrixMarketError(lineno, "object '" + object + "' not supported");
    if (format != "coordinate")
        throw MatrixMarketError(lineno, "format '" + format + "' not supported (coordinate only)");
    if (field == "complex" || field == "pattern")
        throw MatrixMarketError(lineno, "field '" + field + "' not supported (real/integer only)");
    if (field != "real" && field != "integer")
        throw MatrixMarketError(lineno, "unknown field '" + field + "'");
    const bool symmetric = symmetry == "symmetric";
    const bool skew = symmetry == "skew-symmetric";
    if (!symmetric && !skew && symmetry != "general")
        throw MatrixMarketError(lineno, "unknown symmetry '" + symmetry + "'");

    // size line (comments in between are allowed)
    std::size_t n_rows = 0, n_cols = 0, declared_nnz = 0;
    for (;;) {
        if (!std::getline(in, line)) throw MatrixMarketError(lineno + 1, "missing size line");
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream sz(line);
        long long r = 0, c = 0, nz = 0;
        if (!(sz >> r >> c >> nz) || r < 0 || c < 0 || nz < 0)
            throw MatrixMarketError(lineno, "malformed size line");
        n_rows = static_cast<std::size_t>(r);
        n_cols = static_cast<std::size_t>(c);
        declared_nnz = static_cast<std::size_t>(nz);
        break;
    }
    if ((symmetric || skew) && n_rows != n_cols)
        throw MatrixMarketError(lineno, "symmetric storage requires a square matrix");

    std::vector<Triplet> entries;
    entries.reserve(symmetric || skew ? 2 * declared_nnz : declared_nnz);
    std::size_t seen = 0;
    while (seen < declared_nnz) {
        if (!std::getline(in, line))
            throw MatrixMarketError(lineno + 1, "unexpected end of stream, expected " +
                                                    std::to_string(declared_nnz) + " entries");
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream es(line);
        long long i1 = 0, j1 = 0;
        double v = 0.0;
        if (!(es >> i1 >> j1 >> v)) throw MatrixMarketError(lineno, "malformed entry");
        if (i1 < 1 || j1 < 1 || static_cast<std::size_t>(i1) > n_rows ||
            static_cast<std::size_t>(j1) > n_cols)
            throw MatrixMarketError(lineno, "index out of declared bounds");
        const std::size_t i = static_cast<std::size_t>(i1) - 1;
        const std::size_t j = static_cast<std::size_t>(j1) - 1;
        entries.push_back({i, j, v});
        if (symmetric && i != j) entries.push_back({j, i, v});
        if (skew && i != j) entries.push_back({j, i, -v});
        ++seen;
    }
    return from_triplets(n_rows, n_cols, std::move(entries));
}

/// Writes general coordinate format; used by the bench harness to stage
/// generated test systems through the same ingestion path as real files.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.n_rows << " " << a.n_cols << " " << a.nnz() << "\n";
    char buf[64];
    for (std::size_t i = 0; i < a.n_rows; ++i) {
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", a.values[k]);
            out << (i + 1) << " " << (a.col_indices[k] + 1) << " " << buf << "\n";
        }
    }
}

} // namespace ank

#endif // ANDERSONKIT_MATRIX_MARKET_HPP
