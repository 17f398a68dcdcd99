#include "esgen/quadrature.hpp"

#include <cmath>
#include <sstream>

#include "esgen/error.hpp"

namespace esgen {
namespace {

struct Panel {
    double a, b, fa, fm, fb, whole;
};

double simpson_panel(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double checked(const ScalarFn& f, double z, double a, double b) {
    const double v = f(z);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite integrand at z=" << z << " in sub-interval [" << a << ", " << b << "]";
        throw NumericError(os.str());
    }
    return v;
}

double recurse(const ScalarFn& f, const Panel& p, double tol, int depth) {
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = checked(f, lm, p.a, p.b);
    const double frm = checked(f, rm, p.a, p.b);
    const double left = simpson_panel(p.a, m, p.fa, flm, p.fm);
    const double right = simpson_panel(m, p.b, p.fm, frm, p.fb);
    const double delta = left + right - p.whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth <= 0 || m <= p.a || m >= p.b) {
        std::ostringstream os;
        os.precision(17);
        os << "adaptive Simpson did not converge on sub-interval [" << p.a << ", " << p.b
           << "] (estimate change " << delta << ")";
        throw NumericError(os.str());
    }
    return recurse(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth - 1) +
           recurse(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const ScalarFn& f, double a, double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    const double fa = checked(f, a, a, b);
    const double fb = checked(f, b, a, b);
    const double fm = checked(f, 0.5 * (a + b), a, b);
    return recurse(f, {a, b, fa, fm, fb, simpson_panel(a, b, fa, fm, fb)}, tol, max_depth);
}

double simpson(std::span<const double> y, double h) {
    if (y.size() < 3 || y.size() % 2 == 0)
        throw InputError("composite Simpson needs an odd number (>= 3) of samples");
    double s = y.front() + y.back();
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
    return s * h / 3.0;
}

std::vector<double> cumulative_simpson(std::span<const double> y, double h) {
    if (y.size() < 3 || y.size() % 2 == 0)
        throw InputError("cumulative Simpson needs an odd number (>= 3) of samples");
    std::vector<double> out(y.size(), 0.0);
    for (std::size_t i = 0; i + 2 < y.size(); i += 2) {
        // Half panel [x_i, x_{i+1}] from the quadratic through the three nodes.
        out[i + 1] = out[i] + h / 12.0 * (5.0 * y[i] + 8.0 * y[i + 1] - y[i + 2]);
        out[i + 2] = out[i] + h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    }
    return out;
}

}  // namespace esgen
