#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace esgen {

using State = std::vector<double>;
using ScalarFn = std::function<double(double)>;
using VectorField = std::function<State(std::span<const double>)>;
using TimeField = std::function<State(double, std::span<const double>)>;

inline double norm(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
    for (double a : v)
        if (!std::isfinite(a)) return false;
    return true;
}

/// n evenly spaced points on [a, b], endpoints included; a single point sits at the midpoint.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out;
    if (n == 0) return out;
    if (n == 1) return {0.5 * (a + b)};
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

}  // namespace esgen
