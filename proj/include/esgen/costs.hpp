#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esgen/types.hpp"

namespace esgen {

/// Regularity constants of a cost near its minimizer:
///   gamma1 |x-x*|^{2 m1} <= J~(x) <= gamma2 |x-x*|^{2 m1}
///   kappa1 J~^{2-1/m1} <= |grad J|^2 <= kappa2 J~^{2-1/m1}
///   |Hess J| <= mu J~^{1-1/m1}
/// with J~ = J - J*.
struct CostConstants {
    double gamma1 = 0, gamma2 = 0, kappa1 = 0, kappa2 = 0, mu = 0, m1 = 1;
};

/// A cost J: R^n -> R with gradient access and (optionally) known minimizer.
/// Immutable and reentrant once constructed.
class CostProfile {
public:
    using Eval = std::function<double(std::span<const double>)>;
    using Grad = std::function<State(std::span<const double>)>;

    static constexpr double kTolMin = 1e-9;
    static constexpr double kTolGrad = 1e-6;

    CostProfile(std::size_t dim, Eval eval, std::optional<Grad> grad = std::nullopt,
                std::optional<State> minimizer = std::nullopt, double min_value = 0.0,
                std::string name = "custom");

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] double min_value() const { return min_value_; }
    [[nodiscard]] const std::optional<State>& minimizer() const { return minimizer_; }
    [[nodiscard]] bool has_analytic_gradient() const { return grad_.has_value(); }
    /// Relative finite-difference step; the absolute step is h_fd * max(1, |x|).
    [[nodiscard]] double h_fd() const { return h_fd_; }

    double value(std::span<const double> x) const;
    /// J(x) - J*.
    double shifted(std::span<const double> x) const { return value(x) - min_value_; }
    State gradient(std::span<const double> x) const;
    /// Central-difference gradient regardless of whether an analytic one exists.
    State fd_gradient(std::span<const double> x) const;
    /// Row-major n x n Hessian by second central differences of the cost.
    std::vector<double> hessian(std::span<const double> x) const;
    /// Spectral norm of the Hessian.
    double hessian_norm(std::span<const double> x) const;

    /// Throws ModelError unless |J(x*) - J*| <= tol_min and |grad J(x*)| <= tol_grad.
    void validate_minimizer(double tol_min = kTolMin, double tol_grad = kTolGrad) const;

private:
    std::size_t dim_;
    Eval eval_;
    std::optional<Grad> grad_;
    std::optional<State> minimizer_;
    double min_value_;
    double h_fd_ = 1e-5;
    std::string name_;
};

/// Builtin costs: "J1" = 2(x - c)^2, "J2" = 2(x - c)^4 (params: [c], default 1),
/// "quadratic_nd" = |x - c|^2 (params: [n, c_1..c_n], c defaults to 0).
CostProfile builtin_cost(std::string_view name, std::span<const double> params = {});

/// Cost from an expression in x (n = 1) or x1..xn.
CostProfile expression_cost(std::string_view expr, std::size_t dim, std::optional<State> minimizer,
                            double min_value = 0.0, const std::map<std::string, double>& constants = {});

/// Uniform per-axis tensor grid over [c - r, c + r]^n without the ball of radius r/50 around c.
std::vector<State> verification_grid(std::span<const double> center, double radius,
                                     std::size_t points_per_axis);

/// Fit the tightest regularity constants over the verification grid around x*.
/// m1 comes from the log-log slope of J~ against |x - x*| on the inner half of
/// the grid, snapped to {1, 1.5, 2, 2.5, 3}.
CostConstants estimate_a2_constants(const CostProfile& cost, double domain_radius,
                                    std::size_t grid_points);

struct A2Violation {
    State x;
    std::string inequality;  // e.g. "gamma1*d^(2m1) <= J~"
    double slack;            // rhs - lhs; negative means violated
};

struct A2Report {
    std::vector<A2Violation> violations;
    std::size_t points_checked = 0;
    [[nodiscard]] bool passed() const { return violations.empty(); }
};

/// Check the three sandwich inequalities at every grid point. A relative
/// tolerance of `rel_tol` absorbs rounding in the tightest fitted constants.
A2Report verify_a2(const CostProfile& cost, const CostConstants& constants, double domain_radius,
                   std::size_t grid_points, double rel_tol = 1e-9);

/// Grid points (other than x*) with J(x) <= J*; empty when the isolated-minimum condition holds.
std::vector<State> check_a1(const CostProfile& cost, double domain_radius, std::size_t grid_points);

}  // namespace esgen
