/// @file history.hpp
/// @brief FIFO window of iterate/residual difference columns for Anderson
///        mixing.

#ifndef ANDERSONKIT_HISTORY_HPP
#define ANDERSONKIT_HISTORY_HPP

#include <cstddef>
#include <deque>
#include <stdexcept>

#include "andersonkit/dense_qr.hpp"
#include "andersonkit/vector_ops.hpp"

namespace ank {

/// Bookkeeping per stored column: the iteration index i the column belongs
/// to plus the norms ||r^i|| and ||x^i - x^{i-1}|| the accuracy heuristics
/// consume.
struct HistoryColumnMeta {
    std::size_t iteration = 0;
    double r_norm = 0.0;
    double dx_norm = 0.0;
};

/// Paired difference windows: column j holds (x^i - x^{i-1}, r^i - r^{i-1})
/// for consecutive iterates, oldest first, capped at the history length m.
class AndersonHistory {
public:
    explicit AndersonHistory(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("AndersonHistory: capacity 0");
    }

    void push(Vector x_diff, Vector r_diff, HistoryColumnMeta meta) {
        if (x_diff.size() != r_diff.size())
            throw std::invalid_argument("AndersonHistory: column size mismatch");
        if (x_diffs_.size() == capacity_) {
            x_diffs_.pop_front();
            r_diffs_.pop_front();
            metas_.pop_front();
        }
        x_diffs_.push_back(std::move(x_diff));
        r_diffs_.push_back(std::move(r_diff));
        metas_.push_back(meta);
    }

    void clear() {
        x_diffs_.clear();
        r_diffs_.clear();
        metas_.clear();
    }

    std::size_t size() const { return x_diffs_.size(); }
    bool empty() const { return x_diffs_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<HistoryColumnMeta>& metas() const { return metas_; }

    TallMatrix x_matrix() const { return assemble(x_diffs_); }
    TallMatrix r_matrix() const { return assemble(r_diffs_); }

private:
    static TallMatrix assemble(const std::deque<Vector>& cols) {
        TallMatrix m(cols.empty() ? 0 : cols.front().size(), cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double* dst = m.col(j);
            const Vector& src = cols[j];
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
        }
        return m;
    }

    std::size_t capacity_;
    std::deque<Vector> x_diffs_;
    std::deque<Vector> r_diffs_;
    std::deque<HistoryColumnMeta> metas_;
};

} // namespace ank

#endif // ANDERSONKIT_HISTORY_HPP
