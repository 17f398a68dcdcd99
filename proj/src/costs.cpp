#include "esgen/costs.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "esgen/error.hpp"
#include "esgen/expr.hpp"
#include "esgen/numdiff.hpp"

namespace esgen {

CostProfile::CostProfile(std::size_t dim, Eval eval, std::optional<Grad> grad, std::optional<State> minimizer,
                         double min_value, std::string name)
    : dim_(dim),
      eval_(std::move(eval)),
      grad_(std::move(grad)),
      minimizer_(std::move(minimizer)),
      min_value_(min_value),
      name_(std::move(name)) {
    if (dim_ == 0) throw ConfigError("cost dimension must be positive");
    if (minimizer_ && minimizer_->size() != dim_)
        throw ConfigError("minimizer length does not match cost dimension");
}

double CostProfile::value(std::span<const double> x) const { return eval_(x); }

State CostProfile::gradient(std::span<const double> x) const {
    if (grad_) return (*grad_)(x);
    return fd_gradient(x);
}

State CostProfile::fd_gradient(std::span<const double> x) const { return numdiff::gradient(eval_, x); }

std::vector<double> CostProfile::hessian(std::span<const double> x) const {
    const std::size_t n = dim_;
    const double h = numdiff::second_step(norm(x));
    State y(x.begin(), x.end());
    std::vector<double> H(n * n, 0.0);
    const double f0 = eval_(y);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = y[i];
        y[i] = xi + h;
        const double fp = eval_(y);
        y[i] = xi - h;
        const double fm = eval_(y);
        y[i] = xi;
        H[i * n + i] = (fp - 2 * f0 + fm) / (h * h);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double xj = y[j];
            auto at = [&](double si, double sj) {
                y[i] = xi + si * h;
                y[j] = xj + sj * h;
                const double v = eval_(y);
                y[i] = xi;
                y[j] = xj;
                return v;
            };
            const double hij = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
            H[i * n + j] = hij;
            H[j * n + i] = hij;
        }
    }
    return H;
}

double CostProfile::hessian_norm(std::span<const double> x) const {
    const auto H = hessian(x);
    const auto n = static_cast<Eigen::Index>(dim_);
    const Eigen::Map<const Eigen::MatrixXd> M(H.data(), n, n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

void CostProfile::validate_minimizer(double tol_min, double tol_grad) const {
    if (!minimizer_) return;
    const double dv = std::abs(value(*minimizer_) - min_value_);
    const double gn = norm(gradient(*minimizer_));
    if (dv > tol_min || gn > tol_grad) {
        std::ostringstream os;
        os << "cost '" << name_ << "': declared minimizer is inconsistent (|J(x*)-J*| = " << dv
           << ", |grad J(x*)| = " << gn << ")";
        throw ModelError(os.str());
    }
}

CostProfile builtin_cost(std::string_view name, std::span<const double> params) {
    if (name == "J1" || name == "J2") {
        if (params.size() > 1) throw ConfigError(std::string(name) + " takes at most one parameter (x*)");
        const double c = params.empty() ? 1.0 : params[0];
        const bool quartic = name == "J2";
        CostProfile::Eval eval = [c, quartic](std::span<const double> x) {
            const double d = x[0] - c;
            return quartic ? 2 * d * d * d * d : 2 * d * d;
        };
        CostProfile::Grad grad = [c, quartic](std::span<const double> x) {
            const double d = x[0] - c;
            return State{quartic ? 8 * d * d * d : 4 * d};
        };
        return CostProfile(1, std::move(eval), std::move(grad), State{c}, 0.0, std::string(name));
    }
    if (name == "quadratic_nd") {
        if (params.empty()) throw ConfigError("quadratic_nd needs the dimension as first parameter");
        const double nd = params[0];
        if (nd < 1 || nd != std::floor(nd)) throw ConfigError("quadratic_nd dimension must be a positive integer");
        const auto n = static_cast<std::size_t>(nd);
        State c(n, 0.0);
        if (params.size() == n + 1) {
            std::copy(params.begin() + 1, params.end(), c.begin());
        } else if (params.size() != 1) {
            throw ConfigError("quadratic_nd expects [n] or [n, c_1..c_n]");
        }
        CostProfile::Eval eval = [c](std::span<const double> x) {
            double s = 0;
            for (std::size_t i = 0; i < c.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
            return s;
        };
        CostProfile::Grad grad = [c](std::span<const double> x) {
            State g(c.size());
            for (std::size_t i = 0; i < c.size(); ++i) g[i] = 2 * (x[i] - c[i]);
            return g;
        };
        return CostProfile(n, std::move(eval), std::move(grad), c, 0.0, "quadratic_nd");
    }
    throw ConfigError("unknown builtin cost '" + std::string(name) + "'");
}

CostProfile expression_cost(std::string_view expr, std::size_t dim, std::optional<State> minimizer,
                            double min_value, const std::map<std::string, double>& constants) {
    std::vector<std::string> vars;
    if (dim == 1) {
        vars.push_back("x");
        vars.push_back("x1");
    } else {
        for (std::size_t i = 1; i <= dim; ++i) vars.push_back("x" + std::to_string(i));
    }
    auto e = Expression::parse(expr, vars, constants);
    CostProfile::Eval eval;
    if (dim == 1) {
        eval = [e](std::span<const double> x) {
            const double v[2] = {x[0], x[0]};
            return e(std::span<const double>(v, 2));
        };
    } else {
        eval = [e](std::span<const double> x) { return e(x); };
    }
    return CostProfile(dim, std::move(eval), std::nullopt, std::move(minimizer), min_value, e.source());
}

std::vector<State> verification_grid(std::span<const double> center, double radius, std::size_t points) {
    const std::size_t n = center.size();
    std::vector<std::vector<double>> axes(n);
    for (std::size_t i = 0; i < n; ++i) axes[i] = linspace(center[i] - radius, center[i] + radius, points);
    const double excl = radius / 50.0;
    std::vector<State> grid;
    std::vector<std::size_t> idx(n, 0);
    State x(n);
    for (;;) {
        for (std::size_t i = 0; i < n; ++i) x[i] = axes[i][idx[i]];
        if (distance(x, center) > excl) grid.push_back(x);
        std::size_t k = 0;
        while (k < n && ++idx[k] == points) idx[k++] = 0;
        if (k == n) break;
    }
    return grid;
}

namespace {

constexpr std::array<double, 5> kM1Candidates = {1.0, 1.5, 2.0, 2.5, 3.0};

struct Sample {
    State x;
    double d, jt, grad2, hess;
};

std::vector<Sample> sample_grid(const CostProfile& cost, double radius, std::size_t points) {
    if (!cost.minimizer()) throw ConfigError("cost '" + cost.name() + "' has no declared minimizer");
    const State& xs = *cost.minimizer();
    std::vector<Sample> out;
    for (auto& x : verification_grid(xs, radius, points)) {
        const double jt = cost.shifted(x);
        const auto g = cost.gradient(x);
        const double g2 = norm(g) * norm(g);
        const double hn = cost.hessian_norm(x);
        if (!std::isfinite(jt) || !std::isfinite(g2) || !std::isfinite(hn)) {
            std::ostringstream os;
            os << "non-finite cost data at grid point x[0]=" << x[0];
            throw NumericError(os.str());
        }
        const double d = distance(x, xs);
        out.push_back({std::move(x), d, jt, g2, hn});
    }
    if (out.empty()) throw DomainError("verification grid is degenerate (all points at the minimizer)");
    return out;
}

double fit_m1(const std::vector<Sample>& s, double radius) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : s)
        if (p.d <= 0.5 * radius && p.jt > 0) pts.emplace_back(std::log(p.d), std::log(p.jt));
    auto distinct = [&] {
        for (const auto& p : pts)
            if (std::abs(p.first - pts.front().first) > 1e-12) return true;
        return false;
    };
    if (pts.size() < 2 || !distinct()) {
        pts.clear();
        for (const auto& p : s)
            if (p.jt > 0) pts.emplace_back(std::log(p.d), std::log(p.jt));
    }
    if (pts.size() < 2 || !distinct()) throw DomainError("cannot fit m1: grid has fewer than two distinct radii");
    double mx = 0, my = 0;
    for (const auto& [a, b] : pts) {
        mx += a;
        my += b;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0;
    for (const auto& [a, b] : pts) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    const double m1 = 0.5 * sxy / sxx;
    return *std::min_element(kM1Candidates.begin(), kM1Candidates.end(),
                             [m1](double a, double b) { return std::abs(a - m1) < std::abs(b - m1); });
}

}  // namespace

CostConstants estimate_a2_constants(const CostProfile& cost, double domain_radius, std::size_t grid_points) {
    const auto samples = sample_grid(cost, domain_radius, grid_points);
    for (const auto& s : samples) {
        if (s.jt <= 0) {
            std::ostringstream os;
            os << "J~ <= 0 at grid point distance " << s.d << " from the minimizer";
            throw DomainError(os.str());
        }
    }
    CostConstants c;
    c.m1 = fit_m1(samples, domain_radius);
    constexpr double inf = std::numeric_limits<double>::infinity();
    c.gamma1 = c.kappa1 = inf;
    c.gamma2 = c.kappa2 = c.mu = 0;
    for (const auto& s : samples) {
        const double g = s.jt / std::pow(s.d, 2 * c.m1);
        const double k = s.grad2 / std::pow(s.jt, 2 - 1 / c.m1);
        const double m = s.hess / std::pow(s.jt, 1 - 1 / c.m1);
        c.gamma1 = std::min(c.gamma1, g);
        c.gamma2 = std::max(c.gamma2, g);
        c.kappa1 = std::min(c.kappa1, k);
        c.kappa2 = std::max(c.kappa2, k);
        c.mu = std::max(c.mu, m);
    }
    return c;
}

A2Report verify_a2(const CostProfile& cost, const CostConstants& k, double domain_radius,
                   std::size_t grid_points, double rel_tol) {
    const auto samples = sample_grid(cost, domain_radius, grid_points);
    A2Report rep;
    auto check = [&](const Sample& s, const char* what, double lhs, double rhs) {
        const double slack = rhs - lhs;
        if (!(slack >= -rel_tol * std::max(std::abs(lhs), std::abs(rhs)))) rep.violations.push_back({s.x, what, slack});
    };
    for (const auto& s : samples) {
        ++rep.points_checked;
        const double dpow = std::pow(s.d, 2 * k.m1);
        const double jt = std::max(s.jt, 0.0);
        const double jk = std::pow(jt, 2 - 1 / k.m1);
        check(s, "gamma1*d^(2m1) <= J~", k.gamma1 * dpow, s.jt);
        check(s, "J~ <= gamma2*d^(2m1)", s.jt, k.gamma2 * dpow);
        check(s, "kappa1*J~^(2-1/m1) <= |grad J|^2", k.kappa1 * jk, s.grad2);
        check(s, "|grad J|^2 <= kappa2*J~^(2-1/m1)", s.grad2, k.kappa2 * jk);
        check(s, "|Hess J| <= mu*J~^(1-1/m1)", s.hess, k.mu * std::pow(jt, 1 - 1 / k.m1));
    }
    return rep;
}

std::vector<State> check_a1(const CostProfile& cost, double domain_radius, std::size_t grid_points) {
    if (!cost.minimizer()) throw ConfigError("cost '" + cost.name() + "' has no declared minimizer");
    std::vector<State> bad;
    for (auto& x : verification_grid(*cost.minimizer(), domain_radius, grid_points))
        if (!(cost.value(x) > cost.min_value())) bad.push_back(std::move(x));
    return bad;
}

}  // namespace esgen
