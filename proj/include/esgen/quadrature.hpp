#pragma once

#include <span>
#include <vector>

#include "esgen/types.hpp"

namespace esgen {

/// Adaptive Simpson quadrature of f over [a, b] with Richardson-corrected panels.
/// Throws NumericError naming the offending sub-interval when the recursion
/// depth is exhausted or the integrand turns non-finite.
double adaptive_simpson(const ScalarFn& f, double a, double b, double tol, int max_depth = 48);

/// Composite Simpson over uniformly spaced samples (odd sample count).
double simpson(std::span<const double> samples, double step);

/// Running integral from the first node to every node. Even nodes use the
/// composite Simpson sum; odd nodes add the quadratic-interpolant integral
/// over the half panel.
std::vector<double> cumulative_simpson(std::span<const double> samples, double step);

}  // namespace esgen
