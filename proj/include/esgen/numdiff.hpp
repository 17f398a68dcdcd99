#pragma once

#include <algorithm>
#include <span>

#include "esgen/types.hpp"

// Finite-difference helpers shared by the cost, generator and certificate code.
namespace esgen::numdiff {

/// Step used for first derivatives: 1e-5 * max(1, |z|).
inline double first_step(double scale) { return 1e-5 * std::max(1.0, std::abs(scale)); }
/// Step used for second derivatives: 1e-4 * max(1, |z|).
inline double second_step(double scale) { return 1e-4 * std::max(1.0, std::abs(scale)); }

/// Five-point central difference.
double five_point(const ScalarFn& f, double z);

/// Ridders' extrapolation of central differences, starting at step h0 and
/// halving it 27 times; returns the tableau entry with the smallest error estimate.
/// Copes with derivatives whose natural scale is far from |z|.
double ridders(const ScalarFn& f, double z, double h0);
/// Central-difference gradient of a scalar map of a state.
State gradient(const std::function<double(std::span<const double>)>& f, std::span<const double> x);

/// Directional derivative L_g f(x) = lim (f(x + s g(x)) - f(x)) / s, central difference.
State lie_derivative(const VectorField& f, const VectorField& g, std::span<const double> x);

/// L_{g2} L_{g1} f(x) by nesting lie_derivative.
State second_lie_derivative(const VectorField& f, const VectorField& g1, const VectorField& g2,
                            std::span<const double> x);

}  // namespace esgen::numdiff
