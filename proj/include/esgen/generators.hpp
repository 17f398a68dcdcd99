#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esgen/costs.hpp"
#include "esgen/types.hpp"

namespace esgen {

struct Interval {
    double lo = 0, hi = 0;
    [[nodiscard]] bool contains(double z) const { return z >= lo && z <= hi; }
};

/// Growth exponents and bounds of a vanishing generator pair:
///   alpha1 z^m2 <= F0(z) <= alpha2 z^m2,  |F_s(z)| <= M z^m3,
///   |L L F| <= H J~^m4,  m3 = (m2 + 1)/2,  m4 = 3(1 + m2)/2 - 1/m1.
/// m4 and H depend on the cost and are filled in by estimate_a4_bounds.
struct A4Bounds {
    double m2 = 0, m3 = 0.5, m4 = 0;
    double alpha1 = 0, alpha2 = 0, M = 0, H = 0;
};

/// Generating triple (F0, F1, F2) of functions of the shifted cost value z.
/// Immutable after construction; evaluation is reentrant.
class GeneratorPair {
public:
    struct Functions {
        ScalarFn f0, f1, f2;
        ScalarFn df1, df2;  // empty when not available analytically
    };

    GeneratorPair(std::string name, Functions fns, Interval check_range, bool vanishing_at_min,
                  std::vector<double> singular_points = {}, std::optional<A4Bounds> a4 = std::nullopt);

    [[nodiscard]] double F0(double z) const { return fns_.f0(z); }
    [[nodiscard]] double F1(double z) const { return fns_.f1(z); }
    [[nodiscard]] double F2(double z) const { return fns_.f2(z); }
    /// Analytic derivative when available, five-point central difference otherwise.
    [[nodiscard]] double dF1(double z) const;
    [[nodiscard]] double dF2(double z) const;
    [[nodiscard]] bool has_analytic_derivatives() const { return fns_.df1 && fns_.df2; }

    [[nodiscard]] const std::string& name() const { return name_; }
    /// Range of z used by default structural checks (the admissible grid).
    [[nodiscard]] Interval check_range() const { return check_range_; }
    [[nodiscard]] const std::vector<double>& singular_points() const { return singular_; }
    [[nodiscard]] bool vanishing_at_min() const { return vanishing_; }
    [[nodiscard]] const std::optional<A4Bounds>& a4() const { return a4_; }

    /// (F0, F1, F2 + c F1): the integration constant of the construction. Still a valid pair.
    [[nodiscard]] GeneratorPair with_gauge_shift(double c) const;
    /// (F0, F1, F2 + c): breaks the Pfaffian identity for c != 0. Used for defect injection.
    [[nodiscard]] GeneratorPair with_f2_offset(double c) const;
    /// (s F0, F1, s F2).
    [[nodiscard]] GeneratorPair with_f2_scale(double s) const;

private:
    std::string name_;
    Functions fns_;
    Interval check_range_;
    bool vanishing_;
    std::vector<double> singular_;
    std::optional<A4Bounds> a4_;
};

/// Builtin families and their parameters:
///   classic            F1 = z,            F2 = 1
///   exponential        F1 = e^z / 2,      F2 = e^-z
///   bounded            F1 = sin z,        F2 = cos z
///   power [a,k,r,m]    F1 = a z^(r/2m),   F2 = -k/(1-r) z^((2-r)/2m),  F0 = (a k/m) z^((1-m)/m)
///   sd17               F1 = sqrt z sin(ln z), F2 = sqrt z cos(ln z)
///   bounded_vanishing  F1 = sqrt(p1) sin p2, F2 = sqrt(p1) cos p2,
///                      p1 = (1-e^-z)/(1+e^z), p2 = e^z + 2 ln(e^z - 1)
///   tunable [c1,c2]    F1 = c1 z,         F2 = c2/c1,                F0 = c2
/// F0 = 1 unless stated. Families defined for z >= 0 take their z -> 0 limit at z <= 0.
GeneratorPair builtin_generator(std::string_view name, std::span<const double> params = {});

struct ConstructionOptions {
    std::size_t grid_points = 1000;  // the zero scan uses 10x this many points
    std::size_t knots = 256;         // anchors for the running antiderivative
    double tol_quad = 1e-10;
    double tol_pfaff = 1e-6;
    double gauge_shift = 0.0;
};

/// Build F2 = -F1 * Psi1 with Psi1(z) = int_{z_ref}^z F0/F1^2 on the connected
/// component of `domain` around z_ref bounded by zeros of F1. At a zero z*
/// bounding the component F2(z*) is the one-sided limit of -F1 Psi1 obtained by
/// Richardson extrapolation. The result is checked with verify_pfaffian.
GeneratorPair from_f1_f0(ScalarFn f1, std::optional<ScalarFn> f1_deriv, ScalarFn f0, double z_ref,
                         Interval domain, const ConstructionOptions& options = {});

/// automatic: analytic derivatives when the pair has them, five-point otherwise.
/// extrapolated: Ridders' extrapolation, for smooth pairs whose phase varies much faster than z.
enum class DerivativeMode { automatic, finite_difference, extrapolated };

struct PfaffianReport {
    double max_residual = 0;
    double worst_z = 0;
    std::vector<std::pair<double, double>> residuals;  // (z, F2 F1' - F1 F2' - F0)
    double tol = 0;
    [[nodiscard]] bool passed() const { return max_residual <= tol; }
};

/// Residual of F2 F1' - F1 F2' = F0 on z_grid. Points within 1e-4 of a
/// singular point are skipped.
PfaffianReport verify_pfaffian(const GeneratorPair& pair, std::span<const double> z_grid, double tol,
                               DerivativeMode mode = DerivativeMode::automatic);

/// verify_pfaffian on `points` evenly spaced values of the pair's check range,
/// with the default tolerance for its derivative mode (1e-10 analytic, 1e-6 otherwise).
PfaffianReport verify_pfaffian(const GeneratorPair& pair, std::size_t points = 401,
                               DerivativeMode mode = DerivativeMode::automatic);

struct A4Report {
    A4Bounds bounds;
    std::vector<std::string> failures;
    [[nodiscard]] bool passed() const { return failures.empty(); }
};

/// Fit the A4 exponents/bounds of `pair` composed with `cost` on the
/// verification grid (same pair on every axis).
A4Report estimate_a4_bounds(const GeneratorPair& pair, const CostProfile& cost, double m1, double domain_radius,
                            std::size_t grid_points);

}  // namespace esgen
