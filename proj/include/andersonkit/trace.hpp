/// @file trace.hpp
/// @brief Per-iteration solve records shared by all solvers.

#ifndef ANDERSONKIT_TRACE_HPP
#define ANDERSONKIT_TRACE_HPP

#include <chrono>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace ank {

enum class SolveStatus { converged, max_iter, breakdown };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::breakdown: return "breakdown";
    }
    return "unknown";
}

/// One row per update attempt. Iteration indices are strictly increasing
/// except across a rollback, which re-records the same index with the
/// rollback flag set. residual_norm is the 2-norm at the iterate the
/// attempt started from.
struct TraceRow {
    std::size_t iteration = 0;
    double residual_norm = 0.0;
    bool was_anderson_step = false;
    std::size_t reduced_dimension_s = 0; // 0 on non-Anderson rows
    bool rollback = false;
    double wall_time_s = 0.0; // elapsed since solve start
};

struct IterationTrace {
    std::vector<TraceRow> rows;
    SolveStatus status = SolveStatus::max_iter;
    std::size_t iterations = 0; // update steps performed
    double final_relative_residual = std::numeric_limits<double>::infinity();
    double solve_time_s = 0.0;
    double ls_time_s = 0.0;      // cumulative time inside least-squares solves
    std::size_t ls_entries = 0;  // cumulative rows*cols fed to those solves
    bool stagnated = false;
};

class Timer {
public:
    Timer() : start_(clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

/// Round-trippable float formatting used by every CSV writer.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_trace_csv(std::ostream& out, const IterationTrace& trace,
                            const std::vector<std::string>& header_comments = {}) {
    for (const std::string& line : header_comments) out << "# " << line << "\n";
    out << "iteration,residual_norm,was_anderson_step,reduced_dimension_s,rollback,wall_time_s\n";
    for (const TraceRow& row : trace.rows) {
        out << row.iteration << ',' << format_double(row.residual_norm) << ','
            << (row.was_anderson_step ? 1 : 0) << ',' << row.reduced_dimension_s << ','
            << (row.rollback ? 1 : 0) << ',' << format_double(row.wall_time_s) << "\n";
    }
}

} // namespace ank

#endif // ANDERSONKIT_TRACE_HPP
