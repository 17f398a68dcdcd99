// One PASS/FAIL line per acceptance criterion. `--criterion N` runs a single one.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "esgen/certificates.hpp"
#include "esgen/commands.hpp"
#include "esgen/costs.hpp"
#include "esgen/dithers.hpp"
#include "esgen/dynamics.hpp"
#include "esgen/generators.hpp"
#include "esgen/scenario.hpp"

using namespace esgen;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Scenario scenario(const std::string& name) {
    return load_scenario(std::string(ESGEN_SCENARIO_DIR) + "/" + name + ".ini");
}

double max_abs(const State& v) {
    double m = 0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
}

// Max |u| over samples with t in [a, b].
double control_amplitude(const Trajectory& tr, double a, double b) {
    double m = 0;
    for (std::size_t i = 0; i < tr.size(); ++i)
        if (tr.times[i] >= a && tr.times[i] <= b) m = std::max(m, max_abs(tr.controls[i]));
    return m;
}

double error_at(const Trajectory& tr, std::size_t i, const State& xs) { return distance(tr.states[i], xs); }

// Envelope whose sigma comes from the displacement constants on the ball the
// trajectory actually visits (padded by 5%).
DecayEnvelope envelope_for(const EsSystem& sys, const Trajectory& tr, double m_tilde) {
    const auto& xs = *sys.cost().minimizer();
    const State& x0 = tr.states.front();
    const double d0 = distance(x0, xs);
    double reach = 0;
    for (const auto& x : tr.states) reach = std::max(reach, distance(x, xs));
    const double radius = 1.05 * reach;
    const auto a2 = estimate_a2_constants(sys.cost(), radius, 41);
    const auto& gen = sys.axes()[0].gen;
    const auto a4 = estimate_a4_bounds(gen, sys.cost(), a2.m1, radius, 41);
    const double m = 2 * a2.m1 * a4.bounds.m3;
    const auto lc = estimate_lemma_constants(sys, radius, 41, m, 0).inflated;
    DecayEnvelope env;
    env.m_tilde = m_tilde;
    env.rho = 0;
    env.m1 = a2.m1;
    env.gamma1 = a2.gamma1;
    env.gamma2 = a2.gamma2;
    env.x0_dist = d0;
    env.J0 = sys.shifted_cost(x0);
    env.sigma = {lc.M_tilde, lc.L, d0, nu(sys.dithers()), sys.eps()};
    return env;
}

Outcome c1_pfaffian() {
    std::string worst;
    double worst_res = 0;
    bool ok = true;
    for (const char* name : {"classic", "exponential", "bounded", "power", "sd17", "bounded_vanishing", "tunable"}) {
        const auto rep = verify_pfaffian(builtin_generator(name));
        ok = ok && rep.passed() && rep.tol <= 1e-10;
        if (rep.max_residual >= worst_res) {
            worst_res = rep.max_residual;
            worst = name;
        }
    }
    std::mt19937 rng(20240611);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double ctor_worst = 0;
    int built = 0;
    for (int i = 0; i < 50; ++i) {
        const double a = 0.5 + U(rng), b = 0.4 * a * U(rng), w = 0.5 + 2 * U(rng), c = 0.3 * U(rng);
        const double p = 0.5 + U(rng), q = 0.4 * p * U(rng), r = 0.5 + 2 * U(rng);
        const ScalarFn f1 = [=](double z) { return a + b * std::sin(w * z) + c * z * z; };
        const ScalarFn df1 = [=](double z) { return b * w * std::cos(w * z) + 2 * c * z; };
        const ScalarFn f0 = [=](double z) { return p + q * std::cos(r * z); };
        ConstructionOptions opt;
        opt.gauge_shift = U(rng) - 0.5;
        const auto g = from_f1_f0(f1, df1, f0, 0.0, {-2.0, 2.0}, opt);
        const auto range = g.check_range();
        const auto rep = verify_pfaffian(g, linspace(range.lo, range.hi, 201), 1e-6);
        ctor_worst = std::max(ctor_worst, rep.max_residual);
        if (rep.passed()) ++built;
    }
    ok = ok && built == 50;
    return {ok, fmt("builtin max residual %.3g (%s), constructor %d/50 within 1e-6, worst %.3g", worst_res,
                    worst.c_str(), built, ctor_worst)};
}

Outcome c2_beta() {
    const std::vector<DitherPair> one{DitherPair(1, 0.1)};
    const auto b = beta(std::span<const DitherPair>(one));
    double err = std::max({std::abs(b(1, 0) - 1), std::abs(b(0, 1) + 1), std::abs(b(0, 0)), std::abs(b(1, 1))});
    const std::vector<DitherPair> two{DitherPair(1, 0.1), DitherPair(2, 0.1)};
    const auto b2 = beta(std::span<const DitherPair>(two));
    double cross = 0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 2; j < 4; ++j) cross = std::max({cross, std::abs(b2(i, j)), std::abs(b2(j, i))});
    const double w = 2 * std::numbers::pi / 0.1;
    const std::vector<Signal> intro{[w](double t) { return std::sqrt(w) * std::cos(w * t); },
                                    [w](double t) { return std::sqrt(w) * std::sin(w * t); }};
    const auto bi = beta(std::span<const Signal>(intro), 2 * std::numbers::pi / w);
    const double half = std::abs(bi(1, 0) - 0.5);
    return {err <= 1e-9 && cross <= 1e-9 && half <= 1e-9,
            fmt("beta21 %.12g beta12 %.12g, cross max %.2g, intro pair %.12g", b(1, 0), b(0, 1), cross, bi(1, 0))};
}

Outcome c3_averaging() {
    const auto base = scenario("de_classic");
    std::vector<double> dev;
    for (double eps : {0.1, 0.05, 0.025}) {
        const auto sc = apply_overrides(base, {eps, 3.0, std::nullopt});
        dev.push_back(sup_deviation(run_scenario(sc), run_averaged(sc)));
    }
    const bool monotone = dev[1] <= dev[0] && dev[2] <= dev[1];
    const double shrink = 1 - dev[2] / dev[0];
    return {monotone && shrink >= 0.3,
            fmt("sup deviation %.4g, %.4g, %.4g (shrink %.0f%%)", dev[0], dev[1], dev[2], 100 * shrink)};
}

Outcome c4_practical() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"de_classic", "kr_bounded"}) {
        const auto sc = scenario(name);
        const auto tr = run_scenario(sc);
        const State xs = *build_cost(sc).minimizer();
        double late = 0;
        for (std::size_t i = 0; i < tr.size(); ++i)
            if (tr.times[i] >= 5) late = std::max(late, error_at(tr, i, xs));
        const double early_u = control_amplitude(tr, 0, 1), late_u = control_amplitude(tr, 9, 10);
        const bool in_ball = late <= 0.15, sustained = late_u >= 0.5 * early_u;
        ok = ok && in_ball && sustained;
        detail += fmt("%s%s max|x-1| on [5,10] %.4g (rho 0.15), |u| late/early %.3g", detail.empty() ? "" : "; ",
                      name, late, late_u / early_u);
    }
    return {ok, detail};
}

Outcome c5_lyapunov() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"ra_vanishing", "v2_bounded_vanishing"}) {
        const auto sc = scenario(name);
        const auto sys = build_es_system(sc);
        const auto tr = run_scenario(sc);
        const State xs = *sys.cost().minimizer();
        const double fin = error_at(tr, tr.size() - 1, xs);
        const double ratio = control_amplitude(tr, 9, 10) / control_amplitude(tr, 0, 1);
        const auto env = envelope_for(sys, tr, 0.0);
        const double sigma = sigma_bound(env);
        const double lam = fit_envelope_lambda(tr, env, xs);
        ok = ok && fin <= 1e-2 && ratio <= 0.1 && std::isfinite(sigma) && lam >= 1;
        detail += fmt("%s%s |x(10)-1| %.3g, |u| late/early %.3g, sigma %.3g fitted lambda %.3g",
                      detail.empty() ? "" : "; ", name, fin, ratio, sigma, lam);
    }
    return {ok, detail};
}

Outcome c6_quartic() {
    const auto quartic = apply_overrides(scenario("j2_quartic"), {0.01, 5.0, std::nullopt});
    const auto quadratic = apply_overrides(scenario("v2_bounded_vanishing"), {0.01, 5.0, std::nullopt});
    const auto tq = run_scenario(quartic), tl = run_scenario(quadratic);
    const auto sys = build_es_system(quartic);
    const double Jq = tq.cost_values.back() - sys.cost().min_value();
    const double Jl = tl.cost_values.back() - build_cost(quadratic).min_value();
    const double m1 = estimate_a2_constants(sys.cost(), 2, 41).m1;
    const double m_tilde = 1 - 1 / m1;
    const auto env = envelope_for(sys, tq, m_tilde);
    const State xs = *sys.cost().minimizer();
    const double lam = fit_envelope_lambda(tq, env, xs);
    DecayEnvelope fitted = env;
    fitted.lambda = lam;
    const double sigma = sigma_bound(env);
    DecayEnvelope tight = env;
    tight.sigma.M = 0;
    const double lam_tight = fit_envelope_lambda(tq, tight, xs);
    const bool env_ok = std::isfinite(sigma) && lam > 0 && check_envelope(tq, fitted, xs).passed();
    return {Jq >= 2 * Jl && m_tilde > 0 && env_ok,
            fmt("J~(5) quartic %.4g vs quadratic %.4g (ratio %.3g), power envelope m~ %.3g sigma %.3g fitted lambda %.4g"
                " (sigma 1: %.4g)",
                Jq, Jl, Jq / std::max(Jl, 1e-300), m_tilde, sigma, lam, lam_tight)};
}

// Lemma 3/4/5 on consecutive periods of one scenario at eps = 0.025 (nu eps <= 1 there).
struct LemmaTally {
    std::size_t samples = 0, violations = 0;
    double worst3 = 0, worst4 = 0, worst5 = 0;  // max lhs/rhs
};

LemmaTally lemma_suite(const std::string& name) {
    const auto sc = apply_overrides(scenario(name), {0.025, 1.0, std::nullopt});
    const auto sys = build_es_system(sc);
    const auto& cost = sys.cost();
    const State xs = *cost.minimizer();
    const double eps = sys.eps(), h = sys.default_step();
    const double nu_v = nu(sys.dithers());
    const double radius = 2;
    const auto a2 = estimate_a2_constants(cost, radius, 41);
    const auto& gen = sys.axes()[0].gen;
    double m = 0, varpi = 0, alpha1 = 1, alpha2 = 1, m2 = 0;
    if (gen.vanishing_at_min()) {
        const auto a4 = estimate_a4_bounds(gen, cost, a2.m1, radius, 41).bounds;
        m = 2 * a2.m1 * a4.m3;
        varpi = 2 * a2.m1 * a4.m4;
        alpha1 = a4.alpha1;
        alpha2 = a4.alpha2;
        m2 = a4.m2;
    }
    const auto lc = estimate_lemma_constants(sys, radius, 41, m, varpi).inflated;
    const double m_tilde = 1 + m2 - 1 / a2.m1;

    const auto tr = simulate_es(sys, sc.x0, sc.t_end, h, 1);
    const std::size_t per = static_cast<std::size_t>(std::llround(eps / h));
    LemmaTally tally;
    for (std::size_t k0 = 0; k0 + per < tr.size(); k0 += per) {
        const State& x0 = tr.states[k0];
        const double d0 = distance(x0, xs);
        const double J0 = sys.shifted_cost(x0);
        if (J0 < 1e-10) break;
        for (std::size_t i = k0; i <= k0 + per; ++i) {
            const double t = tr.times[i] - tr.times[k0];
            const double lhs = distance(tr.states[i], x0);
            const double rhs = lemma3_bound(lc.M_tilde, lc.L, m, nu_v, t, d0);
            ++tally.samples;
            if (lhs > rhs + slack_tol(rhs)) ++tally.violations;
            if (rhs > 0) tally.worst3 = std::max(tally.worst3, lhs / rhs);
        }
        const State& x1 = tr.states[k0 + per];
        const auto grad = cost.gradient(x0);
        State drift(x0.size());
        double r = 0;
        for (std::size_t i = 0; i < x0.size(); ++i) {
            drift[i] = x1[i] - x0[i] + eps * sys.beta21(i) * grad[i] * sys.axes()[i].gen.F0(J0);
            r += drift[i] * drift[i];
        }
        r = std::sqrt(r);
        const double b4 = lemma4_remainder_bound(lc.H_tilde, varpi, lc.M_tilde, lc.L, m, nu_v, eps, d0);
        ++tally.samples;
        if (r > b4 + slack_tol(b4)) ++tally.violations;
        tally.worst4 = std::max(tally.worst4, r / b4);

        DescentArgs args{alpha1, alpha2, a2.kappa1, a2.kappa2, a2.mu, a2.m1,
                         r / (eps * std::pow(J0, m_tilde + 1 / (2 * a2.m1)))};
        const double J1 = sys.shifted_cost(x1);
        const double b5 = lemma5_descent(J0, eps, args, m_tilde);
        ++tally.samples;
        if (J1 > b5 + slack_tol(b5)) ++tally.violations;
        tally.worst5 = std::max(tally.worst5, J1 / b5);
    }
    return tally;
}

Outcome c7_lemmas() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"de_classic", "ra_vanishing"}) {
        const auto t = lemma_suite(name);
        ok = ok && t.violations == 0 && t.samples > 0;
        detail += fmt("%s%s %zu samples %zu violations (max ratio L3 %.3g L4 %.3g L5 %.3g)",
                      detail.empty() ? "" : "; ", name, t.samples, t.violations, t.worst3, t.worst4, t.worst5);
    }
    return {ok, detail};
}

Outcome c8_certificate() {
    const auto res = certify(scenario("ra_vanishing"), true);
    const auto& c = res.certificate;
    const bool ok = c.eps_bar > 0 && res.descent && res.descent->passed() && res.envelope &&
                    res.envelope->passed() && std::abs(c.lambda_bar - 0.5 * (c.inputs.a4 ? c.inputs.a4->alpha1 : c.inputs.alpha) * c.inputs.cost.kappa1) <=
                        1e-12 * c.lambda_bar;
    return {ok, fmt("eps_bar %.4g, descent %zu samples %s, envelope %zu samples %s", c.eps_bar, res.descent->checked,
                    res.descent->passed() ? "ok" : "violated", res.envelope->checked,
                    res.envelope->passed() ? "ok" : "violated")};
}

Outcome c9_vibrational() {
    bool ok = true;
    std::string detail;
    auto base = scenario("ex_vib");
    for (double mu : {1.0, 2.0, -1.0}) {
        auto sc = base;
        sc.vib.mu = mu;
        const auto tr = run_scenario(sc);
        const double fin = std::abs(tr.states.back()[0]);
        const auto av = run_averaged(sc);
        double err = 0;
        for (std::size_t i = 0; i < av.size(); ++i)
            err = std::max(err, std::abs(av.states[i][0] - std::exp((1 - 2 * sc.vib.alpha * mu * mu) * av.times[i])));
        ok = ok && fin <= 0.1 && err <= 1e-6;
        detail += fmt("%smu %g |x(10)| %.3g averaged err %.2g", detail.empty() ? "" : "; ", mu, fin, err);
    }
    return {ok, detail};
}

// Reported alongside criterion 9, not graded: the same loop with the non-vanishing classic pair.
std::string c9_classic_note() try {
    auto sc = scenario("ex_vib");
    sc.generators = {GeneratorSpec{.builtin = "classic"}};
    std::string out = "classic pair:";
    for (double mu : {1.0, 2.0, -1.0}) {
        sc.vib.mu = mu;
        out += fmt(" mu %g |x(10)| %.3g", mu, std::abs(run_scenario(sc).states.back()[0]));
    }
    return out;
} catch (const std::exception& e) {
    return std::string("classic pair: ") + e.what();
}

Outcome c10_hygiene() {
    const TimeField lin = [](double, std::span<const double> x) { return State{-2 * x[0] + x[1], -x[0] - x[1]}; };
    const State x0{1, 0};
    // Exact solution via the eigen-decomposition of [[-2,1],[-1,-1]]: eigenvalues -3/2 +- i sqrt(3)/2.
    const double t_end = 2, a = -1.5, b = std::sqrt(3.0) / 2;
    const double e = std::exp(a * t_end), cs = std::cos(b * t_end), sn = std::sin(b * t_end);
    const State exact{e * (cs - 0.5 / b * sn), e * (-1 / b * sn)};
    std::vector<double> errs;
    for (double h : {0.1, 0.05, 0.025}) {
        const auto tr = integrate(lin, x0, t_end, h);
        errs.push_back(distance(tr.states.back(), exact));
    }
    const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];

    double grad_err = 0;
    for (const char* name : {"J1", "J2"}) {
        const auto c = builtin_cost(name);
        for (double x : linspace(-2, 3, 11)) {
            const State p{x};
            const auto g = c.gradient(p), f = c.fd_gradient(p);
            grad_err = std::max(grad_err, std::abs(g[0] - f[0]) / std::max(1.0, std::abs(g[0])));
        }
    }
    const std::vector<double> qparams{3, 1, -1, 0.5};
    const auto q = builtin_cost("quadratic_nd", qparams);
    for (double s : linspace(-2, 2, 11)) {
        const State p{s, 0.5 * s, -s};
        const auto g = q.gradient(p), f = q.fd_gradient(p);
        for (std::size_t i = 0; i < 3; ++i)
            grad_err = std::max(grad_err, std::abs(g[i] - f[i]) / std::max(1.0, std::abs(g[i])));
    }

    const auto sc = apply_overrides(scenario("de_classic"), {std::nullopt, 2.0, std::nullopt});
    const bool same = trajectory_csv(run_scenario(sc)) == trajectory_csv(run_scenario(sc));
    return {r1 >= 8 && r2 >= 8 && grad_err <= 1e-6 && same,
            fmt("RK4 error ratios %.3g, %.3g; gradient rel err %.2g; CSV repeat %s", r1, r2, grad_err,
                same ? "identical" : "differs")};
}

struct Criterion {
    const char* title;
    double budget;  // seconds, 0 when not timed
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"pfaffian identity", 1, c1_pfaffian},
        {"averaging coefficients", 1, c2_beta},
        {"lie-bracket approximation", 30, c3_averaging},
        {"practical stability, non-vanishing controls", 0, c4_practical},
        {"lyapunov convergence, vanishing controls", 0, c5_lyapunov},
        {"quartic slowdown", 0, c6_quartic},
        {"lemma dominance", 10, c7_lemmas},
        {"certificate round-trip", 60, c8_certificate},
        {"vibrational stabilization", 10, c9_vibrational},
        {"numerical hygiene", 0, c10_hygiene},
    };
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    if (only < 0 || only > static_cast<int>(all.size())) {
        std::fprintf(stderr, "criterion must be 1..%zu\n", all.size());
        return 2;
    }

    int failed = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (only != 0 && static_cast<int>(i) + 1 != only) continue;
        const auto& c = all[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0 && secs >= c.budget) {
            o.pass = false;
            o.detail += fmt(" [over the %.0f s budget]", c.budget);
        }
        std::printf("%s  %2zu  %-45s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.title, o.detail.c_str(),
                    secs);
        if (i + 1 == 9) std::printf("      9  note: %s\n", c9_classic_note().c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
