#include "esgen/numdiff.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace esgen::numdiff {

double five_point(const ScalarFn& f, double z) {
    const double h = first_step(z);
    return (f(z - 2 * h) - 8 * f(z - h) + 8 * f(z + h) - f(z + 2 * h)) / (12 * h);
}

double ridders(const ScalarFn& f, double z, double h0) {
    constexpr int kRows = 28;
    std::array<std::array<double, kRows>, kRows> a{};
    double h = h0;
    a[0][0] = (f(z + h) - f(z - h)) / (2 * h);
    double best = a[0][0], err = std::numeric_limits<double>::infinity();
    for (int i = 1; i < kRows; ++i) {
        h /= 2;
        a[0][i] = (f(z + h) - f(z - h)) / (2 * h);
        double fac = 4;
        for (int j = 1; j <= i; ++j) {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1);
            fac *= 4;
            const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
            if (e <= err) {
                err = e;
                best = a[j][i];
            }
        }
    }
    return best;
}

State gradient(const std::function<double(std::span<const double>)>& f, std::span<const double> x) {
    const double h = first_step(norm(x));
    State g(x.size());
    State xp(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = xp[i];
        xp[i] = xi + h;
        const double fp = f(xp);
        xp[i] = xi - h;
        const double fm = f(xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2 * h);
    }
    return g;
}

State lie_derivative(const VectorField& f, const VectorField& g, std::span<const double> x) {
    const State dir = g(x);
    const double dn = norm(dir);
    if (dn == 0.0) return State(x.size(), 0.0);
    // Step measured in state space so the probe length is the same for every direction.
    const double s = second_step(norm(x)) / dn;
    State xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] += s * dir[i];
        xm[i] -= s * dir[i];
    }
    State fp = f(xp);
    const State fm = f(xm);
    for (std::size_t i = 0; i < fp.size(); ++i) fp[i] = (fp[i] - fm[i]) / (2 * s);
    return fp;
}

State second_lie_derivative(const VectorField& f, const VectorField& g1, const VectorField& g2,
                            std::span<const double> x) {
    VectorField inner = [&](std::span<const double> y) { return lie_derivative(f, g1, y); };
    return lie_derivative(inner, g2, x);
}

}  // namespace esgen::numdiff
