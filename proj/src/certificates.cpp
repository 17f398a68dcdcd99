#include "esgen/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "esgen/error.hpp"
#include "esgen/numdiff.hpp"

namespace esgen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStrict = 0.99;  // open intervals (0, b) are realised as b * kStrict

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    if (std::isinf(v)) return v > 0 ? "unbounded" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double sum_sqrt_k(std::span<const int> ks) {
    double s = 0;
    for (int k : ks) s += std::sqrt(static_cast<double>(k));
    return s;
}

}  // namespace

double phi(double m_tilde, double J0, double m1, double s) {
    if (s < 0 || m_tilde < 0 || J0 < 0 || !(m1 > 0)) throw DomainError("phi: arguments must be non-negative");
    if (m_tilde == 0) return std::exp(-s / 2);
    const double base = 1 + m_tilde * s * std::pow(J0, m_tilde);
    return std::pow(base, -1 / (2 * m1 * m_tilde));
}

double sigma_bound(const DecayEnvelope& env) {
    const auto& s = env.sigma;
    if (s.M == 0) return 1.0;
    return 1 + s.M / s.L * std::pow(env.gamma2 / env.gamma1, env.m_tilde / 2) *
                   std::pow(s.delta, env.m1 * env.m_tilde) * std::expm1(s.nu * s.L * s.eps);
}

double envelope_eval(const DecayEnvelope& env, double t) {
    const double s = env.lambda * std::max(t - env.sigma.eps, 0.0);
    return sigma_bound(env) * std::pow(env.gamma2 / env.gamma1, 1 / (2 * env.m1)) * env.x0_dist *
               phi(env.m_tilde, env.J0, env.m1, s) +
           env.rho;
}

double lemma3_bound(double M_tilde, double L, double m, double nu, double t, double x0_dist) {
    if (!(L > 0)) throw DomainError("lemma3_bound: L must be positive");
    if (t < 0) throw DomainError("lemma3_bound: t must be non-negative");
    return M_tilde * std::pow(x0_dist, m) / L * std::expm1(nu * L * t);
}

double lemma4_remainder_bound(double H_tilde, double varpi, double M_tilde, double L, double m, double nu, double t,
                              double x0_dist) {
    if (nu * t > 1) {
        std::ostringstream os;
        os << "remainder bound needs nu t <= 1, got nu t = " << nu * t;
        throw PreconditionError(os.str());
    }
    if (!(L > 0)) throw DomainError("lemma4_remainder_bound: L must be positive");
    if (!(varpi == 0 || varpi >= 1)) throw DomainError("lemma4_remainder_bound: varpi must be 0 or >= 1");
    if (t == 0) return 0.0;
    const double c1 = 6 * std::pow(M_tilde * std::expm1(L), varpi) / (L * (varpi + 1) * (varpi + 2) * (varpi + 3));
    // 0^0 = 1 keeps the varpi = 0 case well defined when x0 = x*.
    const double inner = varpi == 0 ? 1.0 : std::pow(nu * t * std::pow(x0_dist, m - 1), varpi);
    const double C = std::pow(2.0, varpi - 1) * H_tilde * (1 + c1 * inner);
    return std::pow(t * nu, 3) * (varpi == 0 ? 1.0 : std::pow(x0_dist, varpi)) * C;
}

double lemma5_descent(double J0, double eps, const DescentArgs& a, double m_tilde) {
    const double k1 = a.alpha1 * a.kappa1 - std::sqrt(a.kappa2) * a.remainder_ratio;
    const double q = a.alpha2 * std::sqrt(a.kappa2) + a.remainder_ratio;
    const double k2 = ((a.m1 - 1) * a.kappa2 + a.mu * a.m1) * q * q;
    const double jm = std::pow(J0, m_tilde);
    const double base = 1 - eps * k1 / a.m1 * jm + eps * eps * k2 / (2 * a.m1 * a.m1) * jm * jm;
    if (base < 0 && a.m1 != std::round(a.m1)) throw DomainError("lemma5_descent: negative base with fractional m1");
    return J0 * std::pow(base, a.m1);
}

// ---------------------------------------------------------------------------

EpsilonCertificate epsilon_certificate(const CertificateInputs& in) {
    const auto& cc = in.cost;
    EpsilonCertificate c;
    c.inputs = in;
    c.vanishing = in.a4.has_value();
    c.lambda_bar = in.lambda_bar;
    if (in.k_list.empty()) throw ConfigError("certificate needs at least one dither frequency");
    if (!(in.L > 0) || !(in.M_F > 0)) throw PreconditionError("certificate needs L > 0 and M_F > 0");
    const double n = static_cast<double>(in.k_list.size());
    const double m1 = cc.m1;
    const double root = std::pow(cc.gamma1 / cc.gamma2, 1 / (2 * m1));

    if (!(in.delta > 0 && in.delta < root * in.Delta)) {
        std::ostringstream os;
        os << "hypothesis delta < (gamma1/gamma2)^(1/(2 m1)) * Delta fails: delta = " << in.delta
           << ", bound = " << root * in.Delta;
        throw PreconditionError(os.str());
    }
    if (!(in.delta0 > in.delta / root && in.delta0 < in.Delta)) {
        std::ostringstream os;
        os << "hypothesis (gamma2/gamma1)^(1/(2 m1)) * delta < delta0 < Delta fails: delta0 = " << in.delta0
           << ", interval = (" << in.delta / root << ", " << in.Delta << ")";
        throw PreconditionError(os.str());
    }
    const double a1k1 = (c.vanishing ? in.a4->alpha1 : in.alpha) * cc.kappa1;
    if (!(in.lambda_bar > 0 && in.lambda_bar < a1k1)) {
        std::ostringstream os;
        os << "hypothesis 0 < lambda_bar < " << (c.vanishing ? "alpha1" : "alpha") << " * kappa1 fails: lambda_bar = "
           << in.lambda_bar << ", bound = " << a1k1;
        throw PreconditionError(os.str());
    }

    c.nu_coeff = 2 * std::sqrt(2 * std::numbers::pi) * sum_sqrt_k(in.k_list);
    c.delta0 = in.delta0;
    c.M_F = in.M_F;
    c.d = in.Delta - in.delta0;
    c.c0 = cc.gamma1 * std::pow(in.delta0, 2 * m1);
    const double nuL = c.nu_coeff * in.L;
    c.eps0 = std::isinf(c.d) ? kInf : kStrict * std::pow(std::log1p(in.L * c.d / in.M_F) / nuL, 2);
    c.eps1 = 1 / (c.nu_coeff * c.nu_coeff);

    const double m2 = c.vanishing ? in.a4->m2 : 0.0;
    c.m_tilde = 1 + m2 - 1 / m1;
    if (c.vanishing && m2 < 1 / m1 - 1) throw PreconditionError("hypothesis m2 >= 1/m1 - 1 fails");
    c.eps2 = kStrict * std::min({c.eps0, c.eps1, std::pow(c.c0, -c.m_tilde)});

    const double k2r = std::sqrt(cc.kappa2);
    const double curv = (m1 - 1) * cc.kappa2 + cc.mu * m1;
    if (c.vanishing) {
        const auto& a4 = *in.a4;
        const double m3 = (m2 + 1) / 2, m4 = 1.5 * (1 + m2) - 1 / m1;
        const double varpi = 2 * m1 * m4;
        c.M_tilde = a4.M * std::pow(cc.gamma2, m3);
        c.H_tilde = std::pow(2 * n, 3) * a4.H * std::pow(cc.gamma2, m4);
        c.c1 = 6 * std::pow(c.M_tilde * std::expm1(in.L), varpi) /
               (in.L * (varpi + 1) * (varpi + 2) * (varpi + 3));
        // With eps J^m~ < 1, nu eps |x0 - x*|^{m-1} <= nu_coeff gamma1^{-m~/2}.
        c.C_bar = std::pow(2.0, varpi - 1) * c.H_tilde *
                  (1 + c.c1 * std::pow(c.nu_coeff * std::pow(cc.gamma1, -c.m_tilde / 2), varpi));
        c.Omega = std::pow(c.nu_coeff, 3) * std::pow(cc.gamma1, -m4) * c.C_bar;
        const double q = a4.alpha2 * k2r + c.Omega;
        c.lambda1 = c.Omega * k2r + curv / (2 * m1) * q * q;
    } else {
        if (!(in.rho > 0 && in.rho0 > 0 && in.rho0 < in.rho && in.rho_min > 0 && in.rho_min < in.rho0 &&
              in.rho < in.delta))
            throw PreconditionError("hypothesis 0 < rho_min < rho0 < rho < delta fails");
        const double dt = std::min(in.rho - in.rho0, in.rho0 - in.rho_min);
        c.eps0_tilde = kStrict * std::pow(std::log1p(in.L * dt / in.M_F) / nuL, 2);
        c.H_tilde = in.H;
        c.c1 = 1 / in.L;
        c.C_bar = 0.5 * c.H_tilde * (1 + c.c1);
        c.Omega = std::pow(c.nu_coeff, 3) * c.C_bar;
        const double g = std::pow(cc.gamma1, 1 / (2 * m1) - 1) * std::pow(in.rho0, 1 - 2 * m1);
        const double q = in.alpha * k2r + std::sqrt(c.eps2) * c.Omega * g;
        c.lambda1 = k2r * c.Omega * g + curv * q * q;
    }
    const double r = (a1k1 - in.lambda_bar) / (std::pow(c.c0, c.m_tilde / 2) * c.lambda1);
    c.eps4 = r * r;
    c.eps_step = kStrict * m1 / (in.lambda_bar * std::pow(c.c0, c.m_tilde));
    if (c.m_tilde > 0) c.eps_power = kStrict / (in.lambda_bar * c.m_tilde * std::pow(c.c0, c.m_tilde));
    c.eps_bar = std::min({c.eps2, c.eps4, c.eps_step, c.eps_power});
    if (!c.vanishing) c.eps_bar = std::min(c.eps_bar, c.eps0_tilde);
    if (!(c.eps_bar > 0) || !std::isfinite(c.eps_bar))
        throw NumericError("certificate produced a non-positive or non-finite eps_bar");
    return c;
}

std::string EpsilonCertificate::to_key_values() const {
    std::ostringstream os;
    auto kv = [&](const char* k, double v) { os << k << '=' << fmt(v) << '\n'; };
    os << "case=" << (vanishing ? "lyapunov" : "practical") << '\n';
    kv("eps_bar", eps_bar);
    kv("eps0", eps0);
    if (!vanishing) kv("eps0_tilde", eps0_tilde);
    kv("eps1", eps1);
    kv("eps2", eps2);
    kv("eps4", eps4);
    kv("eps_step", eps_step);
    kv("eps_power", eps_power);
    kv("nu_coeff", nu_coeff);
    kv("d", d);
    kv("c0", c0);
    kv("delta0", delta0);
    kv("M_F", M_F);
    kv("m_tilde", m_tilde);
    kv("M_tilde", M_tilde);
    kv("H_tilde", H_tilde);
    kv("c1", c1);
    kv("C_bar", C_bar);
    kv("Omega", Omega);
    kv(vanishing ? "lambda1" : "lambda1_tilde", lambda1);
    kv("lambda_bar", lambda_bar);
    kv("L", inputs.L);
    kv("Delta", inputs.Delta);
    kv("delta", inputs.delta);
    kv("gamma1", inputs.cost.gamma1);
    kv("gamma2", inputs.cost.gamma2);
    kv("kappa1", inputs.cost.kappa1);
    kv("kappa2", inputs.cost.kappa2);
    kv("mu", inputs.cost.mu);
    kv("m1", inputs.cost.m1);
    if (inputs.a4) {
        kv("m2", inputs.a4->m2);
        kv("alpha1", inputs.a4->alpha1);
        kv("alpha2", inputs.a4->alpha2);
        kv("M", inputs.a4->M);
        kv("H", inputs.a4->H);
    } else {
        kv("alpha", inputs.alpha);
        kv("H", inputs.H);
        kv("rho", inputs.rho);
        kv("rho0", inputs.rho0);
        kv("rho_min", inputs.rho_min);
    }
    return os.str();
}

std::string EpsilonCertificate::to_text() const {
    std::ostringstream os;
    os << "epsilon certificate (" << (vanishing ? "vanishing controls, Lyapunov decay" : "practical stability")
       << ")\n";
    os << "  eps_bar   " << fmt6(eps_bar) << '\n';
    os << "  eps0      " << fmt6(eps0) << '\n';
    if (!vanishing) os << "  eps0~     " << fmt6(eps0_tilde) << '\n';
    os << "  eps1      " << fmt6(eps1) << '\n';
    os << "  eps2      " << fmt6(eps2) << '\n';
    os << "  eps4      " << fmt6(eps4) << '\n';
    os << "  step      " << fmt6(eps_step) << '\n';
    if (m_tilde > 0) os << "  power     " << fmt6(eps_power) << '\n';
    os << "  d " << fmt6(d) << "  c0 " << fmt6(c0) << "  M_F " << fmt6(M_F) << "  m~ " << fmt6(m_tilde) << '\n';
    os << "  Omega " << fmt6(Omega) << "  lambda1 " << fmt6(lambda1) << "  lambda_bar " << fmt6(lambda_bar)
       << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------

CheckReport check_descent(const Trajectory& traj, double eps, double lambda, double m1, double m_tilde,
                          double J_star) {
    if (!(eps > 0)) throw InputError("check_descent: eps must be positive");
    // Indices of samples sitting on eps-multiples, in order.
    std::vector<std::size_t> idx;
    std::vector<long> mult;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double q = traj.times[i] / eps;
        const double k = std::round(q);
        if (std::abs(q - k) <= 1e-6) {
            idx.push_back(i);
            mult.push_back(static_cast<long>(k));
        }
    }
    if (idx.empty() || mult.front() != 0) throw InputError("trajectory has no sample at t = 0 on the eps grid");
    for (std::size_t j = 1; j < mult.size(); ++j)
        if (mult[j] != mult[j - 1] + 1)
            throw InputError("trajectory samples skip an eps-multiple; sample at t = 0, eps, 2 eps, ...");
    if (idx.size() < 2) throw InputError("trajectory covers less than one eps period");

    CheckReport rep;
    for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
        const double J0 = traj.cost_values[idx[j]] - J_star;
        const double J1 = traj.cost_values[idx[j + 1]] - J_star;
        const double base = std::max(0.0, 1 - eps * lambda / m1 * std::pow(std::max(J0, 0.0), m_tilde));
        const double rhs = std::max(J0, 0.0) * std::pow(base, m1);
        const double slack = rhs + slack_tol(rhs) - J1;
        ++rep.checked;
        if (slack < 0) rep.violations.push_back({traj.times[idx[j + 1]], J1, rhs, slack});
    }
    return rep;
}

CheckReport check_envelope(const Trajectory& traj, const DecayEnvelope& env, std::span<const double> x_star) {
    CheckReport rep;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double lhs = distance(traj.states[i], x_star);
        const double rhs = envelope_eval(env, traj.times[i]);
        const double slack = rhs + slack_tol(rhs) - lhs;
        ++rep.checked;
        if (!(slack >= 0)) rep.violations.push_back({traj.times[i], lhs, rhs, slack});
    }
    return rep;
}

double fit_envelope_lambda(const Trajectory& traj, DecayEnvelope env, std::span<const double> x_star,
                           double lambda_max, int iterations) {
    env.lambda = lambda_max;
    if (check_envelope(traj, env, x_star).passed()) return lambda_max;
    env.lambda = 0;
    if (!check_envelope(traj, env, x_star).passed()) return 0.0;
    double lo = 0, hi = lambda_max;
    for (int i = 0; i < iterations; ++i) {
        env.lambda = 0.5 * (lo + hi);
        (check_envelope(traj, env, x_star).passed() ? lo : hi) = env.lambda;
    }
    return lo;
}

// ---------------------------------------------------------------------------

namespace {

double lipschitz_sup(const EsSystem& sys, const std::vector<State>& grid) {
    double L = 0;
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        for (int s = 1; s <= 2; ++s) {
            const auto& gen = sys.axes()[i].gen;
            const std::function<double(std::span<const double>)> comp = [&](std::span<const double> x) {
                const double z = sys.shifted_cost(x);
                if (gen.vanishing_at_min() && z <= sys.z_floor()) return 0.0;
                return s == 1 ? gen.F1(z) : gen.F2(z);
            };
            for (const auto& x : grid) L = std::max(L, norm(numdiff::gradient(comp, x)));
        }
    }
    return L;
}

double field_sup(const EsSystem& sys, const std::vector<State>& grid) {
    double m = 0;
    const auto fields = sys.channel_fields();
    for (const auto& x : grid)
        for (const auto& f : fields) m = std::max(m, norm(f(x)));
    return m;
}

LemmaConstants inflate(LemmaConstants c) {
    c.M_tilde *= kSafetyFactor;
    c.L *= kSafetyFactor;
    c.H_tilde *= kSafetyFactor;
    c.M_F *= kSafetyFactor;
    return c;
}

}  // namespace

EstimatedLemmaConstants estimate_lemma_constants(const EsSystem& sys, double radius, std::size_t grid_points,
                                                 double m, double varpi) {
    const auto& xs = sys.cost().minimizer();
    if (!xs) throw ConfigError("lemma constants need a cost with a declared minimizer");
    const auto grid = verification_grid(*xs, radius, grid_points);
    if (grid.empty()) throw DomainError("verification grid is degenerate");
    const auto fields = sys.channel_fields();

    LemmaConstants c;
    c.m = m;
    c.varpi = varpi;
    c.L = lipschitz_sup(sys, grid);
    for (const auto& x : grid) {
        const double d = distance(x, *xs);
        double hsum = 0;
        for (const auto& fi : fields) {
            const double fn = norm(fi(x));
            c.M_F = std::max(c.M_F, fn);
            c.M_tilde = std::max(c.M_tilde, fn / std::pow(d, m));
            for (const auto& fj : fields)
                for (const auto& fl : fields) hsum += norm(numdiff::second_lie_derivative(fi, fj, fl, x));
        }
        c.H_tilde = std::max(c.H_tilde, hsum / std::pow(d, varpi));
    }
    if (!std::isfinite(c.L) || !std::isfinite(c.M_tilde) || !std::isfinite(c.H_tilde))
        throw NumericError("lemma constants are not finite on the grid");
    return {c, inflate(c)};
}

EstimatedCertificateInputs estimate_certificate_inputs(const EsSystem& sys, double Delta, double delta,
                                                       double delta0, double lambda_fraction,
                                                       std::size_t grid_points) {
    const auto& xs = sys.cost().minimizer();
    if (!xs) throw ConfigError("certificate estimation needs a cost with a declared minimizer");
    for (const auto& a : sys.axes())
        if (a.gen.name() != sys.axes().front().gen.name())
            throw ConfigError("certificate estimation needs the same generator family on every axis");
    if (!(lambda_fraction > 0 && lambda_fraction < 1)) throw ConfigError("lambda fraction must lie in (0, 1)");
    if (!(delta0 > 0)) throw ConfigError("delta0 must be positive");

    const double rD = std::isfinite(Delta) ? Delta : 2 * delta0;
    const auto gridD = verification_grid(*xs, rD, grid_points);
    const auto grid0 = verification_grid(*xs, delta0, grid_points);

    CertificateInputs raw;
    raw.Delta = Delta;
    raw.delta = delta;
    raw.delta0 = delta0;
    for (const auto& a : sys.axes()) raw.k_list.push_back(a.dither.k);
    raw.cost = estimate_a2_constants(sys.cost(), rD, grid_points);
    raw.L = lipschitz_sup(sys, gridD);
    raw.M_F = field_sup(sys, grid0);

    const auto& gen = sys.axes().front().gen;
    CertificateInputs inf = raw;
    inf.L *= kSafetyFactor;
    inf.M_F *= kSafetyFactor;
    auto& cc = inf.cost;
    cc.gamma1 /= kSafetyFactor;
    cc.kappa1 /= kSafetyFactor;
    cc.gamma2 *= kSafetyFactor;
    cc.kappa2 *= kSafetyFactor;
    cc.mu *= kSafetyFactor;

    if (gen.vanishing_at_min()) {
        const auto rep = estimate_a4_bounds(gen, sys.cost(), raw.cost.m1, rD, grid_points);
        if (!rep.passed()) throw PreconditionError("A4 bounds fail for a vanishing pair: " + rep.failures.front());
        raw.a4 = rep.bounds;
        A4Bounds b = rep.bounds;
        b.alpha1 /= kSafetyFactor;
        b.alpha2 *= kSafetyFactor;
        b.M *= kSafetyFactor;
        b.H *= kSafetyFactor;
        inf.a4 = b;
        raw.lambda_bar = lambda_fraction * raw.a4->alpha1 * raw.cost.kappa1;
        inf.lambda_bar = lambda_fraction * b.alpha1 * cc.kappa1;
    } else {
        double alpha = kInf;
        for (const auto& x : gridD) alpha = std::min(alpha, gen.F0(sys.shifted_cost(x)));
        raw.alpha = alpha;
        inf.alpha = alpha / kSafetyFactor;
        const auto lc = estimate_lemma_constants(sys, rD, grid_points, 0.0, 0.0);
        raw.H = lc.raw.H_tilde;
        inf.H = lc.inflated.H_tilde;
        raw.lambda_bar = lambda_fraction * raw.alpha * raw.cost.kappa1;
        inf.lambda_bar = lambda_fraction * inf.alpha * cc.kappa1;
    }
    return {raw, inf};
}

}  // namespace esgen
