#include "esgen/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "esgen/error.hpp"
#include "esgen/numdiff.hpp"
#include "esgen/quadrature.hpp"

namespace esgen {

GeneratorPair::GeneratorPair(std::string name, Functions fns, Interval check_range, bool vanishing_at_min,
                             std::vector<double> singular_points, std::optional<A4Bounds> a4)
    : name_(std::move(name)),
      fns_(std::move(fns)),
      check_range_(check_range),
      vanishing_(vanishing_at_min),
      singular_(std::move(singular_points)),
      a4_(a4) {
    if (!fns_.f0 || !fns_.f1 || !fns_.f2) throw ConfigError("generator '" + name_ + "' is missing F0, F1 or F2");
    std::sort(singular_.begin(), singular_.end());
}

double GeneratorPair::dF1(double z) const { return fns_.df1 ? fns_.df1(z) : numdiff::five_point(fns_.f1, z); }

double GeneratorPair::dF2(double z) const { return fns_.df2 ? fns_.df2(z) : numdiff::five_point(fns_.f2, z); }

GeneratorPair GeneratorPair::with_gauge_shift(double c) const {
    GeneratorPair out = *this;
    if (c == 0.0) return out;
    auto f1 = fns_.f1, f2 = fns_.f2;
    out.fns_.f2 = [f1, f2, c](double z) { return f2(z) + c * f1(z); };
    if (fns_.df1 && fns_.df2) {
        auto d1 = fns_.df1, d2 = fns_.df2;
        out.fns_.df2 = [d1, d2, c](double z) { return d2(z) + c * d1(z); };
    } else {
        out.fns_.df2 = nullptr;
    }
    out.name_ += "+gauge";
    return out;
}

GeneratorPair GeneratorPair::with_f2_offset(double c) const {
    GeneratorPair out = *this;
    if (c == 0.0) return out;
    auto f2 = fns_.f2;
    out.fns_.f2 = [f2, c](double z) { return f2(z) + c; };
    out.vanishing_ = false;
    out.a4_.reset();
    out.name_ += "+offset";
    return out;
}

GeneratorPair GeneratorPair::with_f2_scale(double s) const {
    GeneratorPair out = *this;
    if (s == 1.0) return out;
    auto f0 = fns_.f0, f2 = fns_.f2;
    out.fns_.f0 = [f0, s](double z) { return s * f0(z); };
    out.fns_.f2 = [f2, s](double z) { return s * f2(z); };
    if (fns_.df2) {
        auto d2 = fns_.df2;
        out.fns_.df2 = [d2, s](double z) { return s * d2(z); };
    }
    if (out.a4_) {
        out.a4_->alpha1 *= std::abs(s);
        out.a4_->alpha2 *= std::abs(s);
        out.a4_->M *= std::max(1.0, std::abs(s));
    }
    return out;
}

namespace {

constexpr Interval kSymmetricRange{-5.0, 5.0};
constexpr Interval kPositiveRange{0.01, 10.0};

void expect_params(std::string_view name, std::span<const double> p, std::size_t max) {
    if (p.size() > max) {
        std::ostringstream os;
        os << "generator '" << name << "' takes at most " << max << " parameters, got " << p.size();
        throw ConfigError(os.str());
    }
}

ScalarFn constant(double c) {
    return [c](double) { return c; };
}

GeneratorPair make_power(std::span<const double> p) {
    expect_params("power", p, 4);
    const double a = p.size() > 0 ? p[0] : 1.0;
    const double k = p.size() > 1 ? p[1] : 1.0;
    const double r = p.size() > 2 ? p[2] : 0.0;
    const double m = p.size() > 3 ? p[3] : 1.0;
    if (!(a > 0) || !(k > 0) || !(r >= 0 && r < 1) || !(m > 0))
        throw ConfigError("power generator needs alpha > 0, k > 0, r in [0, 1), m > 0");
    const double e1 = r / (2 * m), e2 = (2 - r) / (2 * m), e0 = (1 - m) / m;
    const double c2 = -k / (1 - r), c0 = a * k / m;
    GeneratorPair::Functions f;
    f.f1 = [a, e1](double z) { return z > 0 ? a * std::pow(z, e1) : (e1 == 0 ? a : 0.0); };
    f.f2 = [c2, e2](double z) { return z > 0 ? c2 * std::pow(z, e2) : 0.0; };
    f.f0 = [c0, e0](double z) { return z > 0 ? c0 * std::pow(z, e0) : (e0 == 0 ? c0 : (e0 > 0 ? 0.0 : HUGE_VAL)); };
    f.df1 = [a, e1](double z) { return e1 == 0 ? 0.0 : a * e1 * std::pow(z, e1 - 1); };
    f.df2 = [c2, e2](double z) { return c2 * e2 * std::pow(z, e2 - 1); };
    return GeneratorPair("power", std::move(f), kPositiveRange, r > 0, {});
}

GeneratorPair make_sd17() {
    GeneratorPair::Functions f;
    f.f0 = constant(1.0);
    f.f1 = [](double z) { return z > 0 ? std::sqrt(z) * std::sin(std::log(z)) : 0.0; };
    f.f2 = [](double z) { return z > 0 ? std::sqrt(z) * std::cos(std::log(z)) : 0.0; };
    f.df1 = [](double z) {
        const double l = std::log(z);
        return (0.5 * std::sin(l) + std::cos(l)) / std::sqrt(z);
    };
    f.df2 = [](double z) {
        const double l = std::log(z);
        return (0.5 * std::cos(l) - std::sin(l)) / std::sqrt(z);
    };
    A4Bounds a4;
    a4.m2 = 0;
    a4.m3 = 0.5;
    a4.alpha1 = a4.alpha2 = 1;
    a4.M = 1;
    return GeneratorPair("sd17", std::move(f), kPositiveRange, true, {0.0}, a4);
}

// p1 = (1 - e^-z)/(1 + e^z), p2 = e^z + 2 ln(e^z - 1), written to stay finite for large z.
double bv_p1(double z) { return -std::expm1(-z) / (1 + std::exp(z)); }
double bv_p2(double z) { return std::exp(z) + 2 * std::log(std::expm1(z)); }
double bv_dp1(double z) {
    const double q = std::exp(-z);
    return q * (-1 + 2 * q + q * q) / ((1 + q) * (1 + q));
}
double bv_dp2(double z) { return std::exp(z) - 2 / std::expm1(-z); }

GeneratorPair make_bounded_vanishing() {
    GeneratorPair::Functions f;
    f.f0 = constant(1.0);
    f.f1 = [](double z) { return z > 0 ? std::sqrt(bv_p1(z)) * std::sin(bv_p2(z)) : 0.0; };
    f.f2 = [](double z) { return z > 0 ? std::sqrt(bv_p1(z)) * std::cos(bv_p2(z)) : 0.0; };
    f.df1 = [](double z) {
        const double rho = std::sqrt(bv_p1(z)), drho = bv_dp1(z) / (2 * rho), th = bv_p2(z);
        return drho * std::sin(th) + rho * std::cos(th) * bv_dp2(z);
    };
    f.df2 = [](double z) {
        const double rho = std::sqrt(bv_p1(z)), drho = bv_dp1(z) / (2 * rho), th = bv_p2(z);
        return drho * std::cos(th) - rho * std::sin(th) * bv_dp2(z);
    };
    A4Bounds a4;
    a4.m2 = 0;
    a4.m3 = 0.5;
    a4.alpha1 = a4.alpha2 = 1;
    a4.M = std::sqrt(0.5);  // sup sqrt(p1(z)/z), attained as z -> 0
    return GeneratorPair("bounded_vanishing", std::move(f), kPositiveRange, true, {0.0}, a4);
}

}  // namespace

GeneratorPair builtin_generator(std::string_view name, std::span<const double> p) {
    GeneratorPair::Functions f;
    if (name == "classic") {
        expect_params(name, p, 0);
        f.f0 = constant(1.0);
        f.f1 = [](double z) { return z; };
        f.f2 = constant(1.0);
        f.df1 = constant(1.0);
        f.df2 = constant(0.0);
        return GeneratorPair("classic", std::move(f), kSymmetricRange, false);
    }
    if (name == "exponential") {
        expect_params(name, p, 0);
        f.f0 = constant(1.0);
        f.f1 = [](double z) { return 0.5 * std::exp(z); };
        f.f2 = [](double z) { return std::exp(-z); };
        f.df1 = [](double z) { return 0.5 * std::exp(z); };
        f.df2 = [](double z) { return -std::exp(-z); };
        return GeneratorPair("exponential", std::move(f), kSymmetricRange, false);
    }
    if (name == "bounded") {
        expect_params(name, p, 0);
        f.f0 = constant(1.0);
        f.f1 = [](double z) { return std::sin(z); };
        f.f2 = [](double z) { return std::cos(z); };
        f.df1 = [](double z) { return std::cos(z); };
        f.df2 = [](double z) { return -std::sin(z); };
        return GeneratorPair("bounded", std::move(f), kSymmetricRange, false);
    }
    if (name == "power") return make_power(p);
    if (name == "sd17") {
        expect_params(name, p, 0);
        return make_sd17();
    }
    if (name == "bounded_vanishing") {
        expect_params(name, p, 0);
        return make_bounded_vanishing();
    }
    if (name == "tunable") {
        expect_params(name, p, 2);
        const double c1 = p.size() > 0 ? p[0] : 1.0;
        const double c2 = p.size() > 1 ? p[1] : 1.0;
        if (c1 == 0.0) throw ConfigError("tunable generator needs c1 != 0");
        f.f0 = constant(c2);
        f.f1 = [c1](double z) { return c1 * z; };
        f.f2 = constant(c2 / c1);
        f.df1 = constant(c1);
        f.df2 = constant(0.0);
        return GeneratorPair("tunable", std::move(f), kSymmetricRange, false);
    }
    throw ConfigError("unknown builtin generator '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Construction from (F1, F0)

namespace {

double bisect_zero(const ScalarFn& f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 200 && b - a > 1e-12; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

std::vector<double> scan_zeros(const ScalarFn& f, Interval dom, std::size_t n) {
    std::vector<double> zeros;
    const auto zs = linspace(dom.lo, dom.hi, n + 1);
    double prev = f(zs[0]);
    if (prev == 0.0) zeros.push_back(zs[0]);
    for (std::size_t i = 1; i < zs.size(); ++i) {
        const double cur = f(zs[i]);
        if (cur == 0.0) {
            zeros.push_back(zs[i]);
        } else if (prev != 0.0 && (cur < 0) != (prev < 0)) {
            zeros.push_back(bisect_zero(f, zs[i - 1], zs[i]));
        }
        prev = cur;
    }
    return zeros;
}

// Running antiderivative Psi1 of F0/F1^2 anchored at z_ref (Psi1(z_ref) = 0).
struct Antiderivative {
    ScalarFn integrand;
    double z_ref, lo, hi, step, tol;
    bool lo_singular, hi_singular;
    std::vector<double> knots, values;  // sorted knots and Psi1 at each

    double segment(double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double rough = (b - a) / 6.0 * (integrand(a) + 4 * integrand(mid) + integrand(b));
        return adaptive_simpson(integrand, a, b, tol * std::max(1.0, std::abs(rough)));
    }

    void build(std::size_t count) {
        step = (hi - lo) / static_cast<double>(count);
        const double margin = 0.25 * step;
        const double first = lo_singular ? lo + margin : lo;
        const double last = hi_singular ? hi - margin : hi;
        const auto jmin = static_cast<long>(std::ceil((first - z_ref) / step));
        const auto jmax = static_cast<long>(std::floor((last - z_ref) / step));
        for (long j = jmin; j <= jmax; ++j) knots.push_back(z_ref + static_cast<double>(j) * step);
        values.assign(knots.size(), 0.0);
        const auto ref = static_cast<std::size_t>(-jmin);
        for (std::size_t i = ref + 1; i < knots.size(); ++i) values[i] = values[i - 1] + segment(knots[i - 1], knots[i]);
        for (std::size_t i = ref; i-- > 0;) values[i] = values[i + 1] - segment(knots[i], knots[i + 1]);
    }

    double operator()(double z) const {
        const double pos = (z - knots.front()) / step;
        auto idx = static_cast<long>(std::lround(pos));
        idx = std::clamp<long>(idx, 0, static_cast<long>(knots.size()) - 1);
        const auto i = static_cast<std::size_t>(idx);
        if (z == knots[i]) return values[i];
        return values[i] + (z > knots[i] ? segment(knots[i], z) : -segment(z, knots[i]));
    }
};

}  // namespace

GeneratorPair from_f1_f0(ScalarFn f1, std::optional<ScalarFn> f1_deriv, ScalarFn f0, double z_ref, Interval domain,
                         const ConstructionOptions& opt) {
    if (!(domain.lo < domain.hi)) throw ConfigError("construction domain must satisfy lo < hi");
    if (!domain.contains(z_ref)) throw ConfigError("z_ref lies outside the construction domain");
    if (f1(z_ref) == 0.0) throw ConfigError("F1(z_ref) = 0; choose z_ref away from the zeros of F1");

    const auto zeros = scan_zeros(f1, domain, 10 * opt.grid_points);
    auto st = std::make_shared<Antiderivative>();
    st->z_ref = z_ref;
    st->lo = domain.lo;
    st->hi = domain.hi;
    st->lo_singular = st->hi_singular = false;
    for (double z : zeros) {
        if (z < z_ref && z >= st->lo) {
            st->lo = z;
            st->lo_singular = true;
        }
        if (z > z_ref && z <= st->hi) {
            st->hi = z;
            st->hi_singular = true;
        }
    }
    st->tol = opt.tol_quad;
    st->integrand = [f0, f1](double z) {
        const double v = f1(z);
        return f0(z) / (v * v);
    };
    st->build(std::max<std::size_t>(opt.knots, 8));

    const double lo = st->lo, hi = st->hi;
    const double c = opt.gauge_shift;
    auto raw_f2 = [st, f1, c](double z) { return -f1(z) * ((*st)(z) - c); };

    // One-sided limits of -F1 Psi1 at singular endpoints, by Richardson extrapolation
    // on h, h/2, h/4, h/8 (leading error term linear in h).
    auto limit_at = [&](double zs, double dir) {
        const double h0 = std::min(1e-2, 0.1 * (hi - lo));
        double t[4][4];
        for (int i = 0; i < 4; ++i) t[i][0] = raw_f2(zs + dir * h0 / std::pow(2.0, i));
        for (int j = 1; j < 4; ++j)
            for (int i = j; i < 4; ++i) {
                const double p = std::pow(2.0, j);
                t[i][j] = (p * t[i][j - 1] - t[i - 1][j - 1]) / (p - 1);
            }
        return t[3][3];
    };
    const double f2_lo = st->lo_singular ? limit_at(lo, +1.0) : 0.0;
    const double f2_hi = st->hi_singular ? limit_at(hi, -1.0) : 0.0;
    const bool lo_s = st->lo_singular, hi_s = st->hi_singular;

    GeneratorPair::Functions fns;
    fns.f0 = f0;
    fns.f1 = f1;
    fns.f2 = [=](double z) {
        if (z < lo || z > hi) {
            std::ostringstream os;
            os << "constructed generator evaluated at z=" << z << " outside its component [" << lo << ", " << hi << "]";
            throw DomainError(os.str());
        }
        if (lo_s && std::abs(z - lo) <= 1e-12) return f2_lo;
        if (hi_s && std::abs(z - hi) <= 1e-12) return f2_hi;
        return raw_f2(z);
    };
    if (f1_deriv) fns.df1 = *f1_deriv;

    std::vector<double> singular;
    if (lo_s) singular.push_back(lo);
    if (hi_s) singular.push_back(hi);
    // Keep the default check grid clear of the derivative stencil at the component ends.
    const double pad = 1e-3 * (hi - lo);
    GeneratorPair pair("constructed", std::move(fns), Interval{lo + pad, hi - pad}, false, std::move(singular));

    const auto rep = verify_pfaffian(pair, linspace(lo + pad, hi - pad, 201), opt.tol_pfaff);
    if (!rep.passed()) {
        std::ostringstream os;
        os << "constructed generator fails the Pfaffian check: max residual " << rep.max_residual << " at z="
           << rep.worst_z;
        throw NumericError(os.str());
    }
    return pair;
}

// ---------------------------------------------------------------------------
// Checks

PfaffianReport verify_pfaffian(const GeneratorPair& pair, std::span<const double> z_grid, double tol,
                               DerivativeMode mode) {
    PfaffianReport rep;
    rep.tol = tol;
    const bool analytic = mode == DerivativeMode::automatic && pair.has_analytic_derivatives();
    for (double z : z_grid) {
        bool near = false;
        for (double s : pair.singular_points()) near = near || std::abs(z - s) < 1e-4;
        if (near) continue;
        ScalarFn f1 = [&](double y) { return pair.F1(y); };
        ScalarFn f2 = [&](double y) { return pair.F2(y); };
        double d1, d2;
        if (analytic) {
            d1 = pair.dF1(z);
            d2 = pair.dF2(z);
        } else if (mode == DerivativeMode::extrapolated) {
            const double h0 = 0.05 * std::max(std::abs(z), 1e-2);
            d1 = numdiff::ridders(f1, z, h0);
            d2 = numdiff::ridders(f2, z, h0);
        } else {
            d1 = numdiff::five_point(f1, z);
            d2 = numdiff::five_point(f2, z);
        }
        const double r = pair.F2(z) * d1 - pair.F1(z) * d2 - pair.F0(z);
        rep.residuals.emplace_back(z, r);
        const double a = std::isfinite(r) ? std::abs(r) : std::numeric_limits<double>::infinity();
        if (a > rep.max_residual || rep.residuals.size() == 1) {
            rep.max_residual = std::max(rep.max_residual, a);
            rep.worst_z = z;
        }
    }
    return rep;
}

PfaffianReport verify_pfaffian(const GeneratorPair& pair, std::size_t points, DerivativeMode mode) {
    const bool analytic = mode == DerivativeMode::automatic && pair.has_analytic_derivatives();
    const auto range = pair.check_range();
    return verify_pfaffian(pair, linspace(range.lo, range.hi, points), analytic ? 1e-10 : 1e-6, mode);
}

A4Report estimate_a4_bounds(const GeneratorPair& pair, const CostProfile& cost, double m1, double domain_radius,
                            std::size_t grid_points) {
    if (!cost.minimizer()) throw ConfigError("A4 estimation needs a cost with a declared minimizer");
    const auto grid = verification_grid(*cost.minimizer(), domain_radius, grid_points);
    if (grid.empty()) throw DomainError("verification grid is degenerate (all points at the minimizer)");
    const std::size_t n = cost.dim();

    A4Report rep;
    std::vector<double> jt;
    jt.reserve(grid.size());
    for (const auto& x : grid) {
        const double v = cost.shifted(x);
        if (!(v > 0)) throw DomainError("J~ <= 0 on the A4 verification grid");
        jt.push_back(v);
    }

    // m2: log-log slope of F0 against J~.
    bool f0_positive = true;
    double mx = 0, my = 0;
    for (double z : jt) {
        const double f = pair.F0(z);
        if (!(f > 0)) f0_positive = false;
        mx += std::log(z);
        my += f > 0 ? std::log(f) : 0.0;
    }
    auto& b = rep.bounds;
    if (!f0_positive) {
        rep.failures.emplace_back("F0 is not positive on the grid");
    } else {
        mx /= static_cast<double>(jt.size());
        my /= static_cast<double>(jt.size());
        double sxy = 0, sxx = 0;
        for (double z : jt) {
            sxy += (std::log(z) - mx) * (std::log(pair.F0(z)) - my);
            sxx += (std::log(z) - mx) * (std::log(z) - mx);
        }
        b.m2 = sxx > 0 ? sxy / sxx : 0.0;
        const double snapped = std::round(b.m2 * 4) / 4;
        if (std::abs(snapped - b.m2) < 0.02) b.m2 = snapped;
    }
    b.m3 = 0.5 * (b.m2 + 1);
    b.m4 = 1.5 * (1 + b.m2) - 1 / m1;
    if (b.m2 < 1 / m1 - 1) rep.failures.emplace_back("m2 < 1/m1 - 1");

    b.alpha1 = std::numeric_limits<double>::infinity();
    b.alpha2 = b.M = b.H = 0;
    for (double z : jt) {
        const double f0 = pair.F0(z) / std::pow(z, b.m2);
        b.alpha1 = std::min(b.alpha1, f0);
        b.alpha2 = std::max(b.alpha2, f0);
        b.M = std::max({b.M, std::abs(pair.F1(z)) / std::pow(z, b.m3), std::abs(pair.F2(z)) / std::pow(z, b.m3)});
    }
    if (!(b.alpha1 > 0)) rep.failures.emplace_back("alpha1 J~^m2 <= F0 fails: alpha1 is not positive");

    // Near the minimizer the bound |F_s| <= M J~^m3 must not blow up.
    if (!pair.vanishing_at_min())
        rep.failures.emplace_back("F1 or F2 does not vanish at z = 0, so |F_s| <= M J~^m3 cannot hold near x*");
    for (double zeta : {1e-6, 1e-8, 1e-10}) {
        const double r = std::max(std::abs(pair.F1(zeta)), std::abs(pair.F2(zeta))) / std::pow(zeta, b.m3);
        if (!(r <= 1.05 * b.M)) {
            std::ostringstream os;
            os << "|F_s(z)|/z^m3 = " << r << " at z=" << zeta << " exceeds the grid bound M=" << b.M;
            rep.failures.push_back(os.str());
            break;
        }
    }

    // Second Lie derivatives of the per-axis fields F_s(J~(x)) e_i.
    std::vector<VectorField> fields;
    for (std::size_t i = 0; i < n; ++i) {
        for (int s = 1; s <= 2; ++s) {
            fields.emplace_back([&pair, &cost, i, s, n](std::span<const double> x) {
                State v(n, 0.0);
                const double z = cost.shifted(x);
                v[i] = s == 1 ? pair.F1(z) : pair.F2(z);
                return v;
            });
        }
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double scale = std::pow(jt[g], b.m4);
        for (const auto& fi : fields)
            for (const auto& fj : fields)
                for (const auto& fl : fields) {
                    const double v = norm(numdiff::second_lie_derivative(fi, fj, fl, grid[g]));
                    b.H = std::max(b.H, v / scale);
                }
    }
    if (!std::isfinite(b.H)) rep.failures.emplace_back("second Lie derivatives are not bounded by H J~^m4");
    return rep;
}

}  // namespace esgen
