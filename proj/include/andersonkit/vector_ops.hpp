/// @file vector_ops.hpp
/// @brief Dense vector helpers shared by all solvers.

#ifndef ANDERSONKIT_VECTOR_OPS_HPP
#define ANDERSONKIT_VECTOR_OPS_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ank {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm_inf(const Vector& v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector subtract(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("subtract: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline void scale(Vector& v, double alpha) {
    for (double& x : v) x *= alpha;
}

inline bool all_finite(const Vector& v) {
    for (const double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace ank

#endif // ANDERSONKIT_VECTOR_OPS_HPP
