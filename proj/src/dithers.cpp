#include "esgen/dithers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "esgen/error.hpp"
#include "esgen/quadrature.hpp"

namespace esgen {

DitherPair::DitherPair(int k_, double eps_) : k(k_), eps(eps_) {
    if (k <= 0) throw ConfigError("dither frequency index k must be a positive integer");
    if (!(eps > 0)) throw ConfigError("dither period eps must be positive");
}

double DitherPair::amplitude() const { return 2.0 * std::sqrt(std::numbers::pi * k / eps); }

double DitherPair::angular_frequency() const { return 2.0 * std::numbers::pi * k / eps; }

std::pair<double, double> DitherPair::operator()(double t) const {
    const double a = amplitude();
    const double ph = angular_frequency() * t;
    return {a * std::cos(ph), a * std::sin(ph)};
}

std::pair<double, double> eval_dither(const DitherPair& d, double t) { return d(t); }

namespace {

std::vector<double> sample(const Signal& u, double h, std::size_t steps) {
    std::vector<double> y(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        y[i] = u(static_cast<double>(i) * h);
        if (!std::isfinite(y[i])) {
            std::ostringstream os;
            os << "non-finite signal value at t=" << static_cast<double>(i) * h;
            throw NumericError(os.str());
        }
    }
    return y;
}

std::size_t even_steps(std::size_t steps) {
    if (steps < 1024) throw ConfigError("quad_steps must be at least 1024");
    return steps + (steps % 2);
}

}  // namespace

BetaMatrix beta(std::span<const Signal> signals, double period, std::size_t quad_steps) {
    if (!(period > 0)) throw ConfigError("signal period must be positive");
    const std::size_t steps = even_steps(quad_steps);
    const double h = period / static_cast<double>(steps);
    const std::size_t n = signals.size();
    std::vector<std::vector<double>> vals(n), prim(n);
    for (std::size_t i = 0; i < n; ++i) {
        vals[i] = sample(signals[i], h, steps);
        prim[i] = cumulative_simpson(vals[i], h);
    }
    std::vector<double> entries(n * n);
    std::vector<double> prod(steps + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t s = 0; s <= steps; ++s) prod[s] = vals[i][s] * prim[j][s];
            entries[i * n + j] = simpson(prod, h) / period;
        }
    }
    return BetaMatrix(n, std::move(entries), steps);
}

double common_eps(std::span<const DitherPair> dithers) {
    if (dithers.empty()) throw ConfigError("no dither pairs given");
    const double eps = dithers.front().eps;
    for (const auto& d : dithers)
        if (d.eps != eps) throw ConfigError("dither pairs must share the same eps");
    return eps;
}

BetaMatrix beta(std::span<const DitherPair> dithers, std::size_t quad_steps) {
    const double eps = common_eps(dithers);
    std::size_t kmax = 1;
    for (const auto& d : dithers) kmax = std::max(kmax, static_cast<std::size_t>(d.k));
    const std::size_t unit = std::lcm<std::size_t>(2, kmax);
    std::size_t steps = std::max<std::size_t>(quad_steps, 1024);
    steps = (steps + unit - 1) / unit * unit;
    std::vector<Signal> sig;
    for (const auto& d : dithers) {
        sig.emplace_back([d](double t) { return d(t).first; });
        sig.emplace_back([d](double t) { return d(t).second; });
    }
    return beta(sig, eps, steps);
}

double period_mean(const Signal& u, double period, std::size_t quad_steps) {
    const std::size_t steps = even_steps(quad_steps);
    const double h = period / static_cast<double>(steps);
    return simpson(sample(u, h, steps), h) / period;
}

double nu(std::span<const DitherPair> dithers) {
    const double eps = common_eps(dithers);
    double s = 0;
    for (const auto& d : dithers) s += std::sqrt(static_cast<double>(d.k));
    return 2.0 * std::sqrt(2.0 * std::numbers::pi) / std::sqrt(eps) * s;
}

}  // namespace esgen
