#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "esgen/certificates.hpp"
#include "esgen/error.hpp"

using namespace esgen;
using doctest::Approx;

namespace {

EsSystem single(const char* gen, double eps = 0.1) {
    return EsSystem(builtin_cost("J1"), {Axis{builtin_generator(gen), DitherPair(1, eps)}});
}

}  // namespace

TEST_SUITE("certificates") {
    TEST_CASE("decay rate function") {
        CHECK(phi(0, 1, 1, 0) == 1);
        CHECK(phi(0, 1, 1, 2 * std::log(2.0)) == Approx(0.5));
        CHECK(phi(1, 2, 2, 1) == Approx(std::pow(3.0, -0.25)));
        CHECK(phi(0.5, 2, 2, 0) == 1);
        CHECK(phi(0.5, 2, 2, 1) < phi(0.5, 2, 2, 0.5));
        CHECK_THROWS_AS((void)phi(0, 1, 1, -1), DomainError);
    }

    TEST_CASE("envelope") {
        DecayEnvelope env;
        env.m1 = 1;
        env.gamma1 = env.gamma2 = 2;
        env.x0_dist = 1;
        env.lambda = 1;
        env.rho = 0.05;
        env.sigma = {0, 1, 1, 10, 0.1};
        CHECK(sigma_bound(env) == 1);
        CHECK(envelope_eval(env, 10) == Approx(std::exp(-9.9 / 2) + 0.05));
        env.sigma = {1.5, 3.3, 1, 15.85, 0.1};
        const double s = sigma_bound(env);
        CHECK(s > 1);
        CHECK(envelope_eval(env, 0.1) == Approx(s + 0.05));
        env.sigma.eps = 1e-6;
        CHECK(sigma_bound(env) == Approx(1).epsilon(1e-3));
    }

    TEST_CASE("lemma bounds") {
        CHECK(lemma3_bound(1, 1, 0, 1, 0, 1) == 0);
        CHECK(lemma3_bound(1, 1, 0, 1, std::log(2.0), 1) == Approx(1));
        CHECK(lemma4_remainder_bound(2, 0, 1, 4, 0, 1, 0, 1) == 0);
        // varpi = 0: C = H/2 (1 + 1/L)
        CHECK(lemma4_remainder_bound(2, 0, 1, 4, 0, 1, 0.5, 1) == Approx(0.125 * 1.0 * (1 + 0.25)));
        CHECK_THROWS_AS((void)lemma4_remainder_bound(2, 0, 1, 4, 0, 10, 0.5, 1), PreconditionError);

        DescentArgs a;
        a.alpha1 = a.alpha2 = a.kappa1 = a.kappa2 = 1;
        a.mu = 0.5;
        a.m1 = 1;
        const double k2 = (0 * 1 + 0.5) * 1;
        CHECK(lemma5_descent(3, 0.1, a, 0) == Approx(3 * (1 - 0.1 + 0.005 * k2)));
        CHECK(lemma5_descent(3, 1e-12, a, 0) == Approx(3));
    }

    TEST_CASE("single-axis thresholds") {
        CertificateInputs in;
        in.L = 3;
        in.M_F = 1;
        in.k_list = {1};
        in.Delta = std::numeric_limits<double>::infinity();
        in.delta = 1;
        in.delta0 = 1.5;
        in.cost = {2, 2, 8, 8, 4, 1};
        in.a4 = A4Bounds{0, 0.5, 0.5, 1, 1, 1, 10};
        in.lambda_bar = 4;
        const auto c = epsilon_certificate(in);
        CHECK(c.eps1 == Approx(1 / (8 * std::numbers::pi)));
        CHECK(std::isinf(c.eps0));
        CHECK(c.eps_bar > 0);
        CHECK(std::isfinite(c.eps_bar));
        CHECK(c.to_key_values().find("eps0=inf") != std::string::npos);
        CHECK(c.to_text().find("unbounded") != std::string::npos);

        auto bad = in;
        bad.lambda_bar = 20;
        CHECK_THROWS_AS((void)epsilon_certificate(bad), PreconditionError);
        bad = in;
        bad.Delta = 2;
        bad.delta = 2.5;
        CHECK_THROWS_AS((void)epsilon_certificate(bad), PreconditionError);
    }

    TEST_CASE("descent check") {
        Trajectory still;
        for (int i = 0; i <= 20; ++i) {
            still.times.push_back(0.01 * i);
            still.states.push_back({1.0});
            still.cost_values.push_back(0.0);
        }
        CHECK(check_descent(still, 0.01, 5, 1, 0, 0).passed());

        const auto sys = single("classic", 0.01);
        const auto lie = simulate_lie(sys, State{0.0}, 2, 1e-3);
        CHECK(check_descent(lie, 0.01, 7.2, 1, 0, 0).passed());
        const auto es = simulate_es(sys, State{0.0}, 1, std::nullopt, 10);
        CHECK_FALSE(check_descent(es, 0.01, 7.2, 1, 0, 0).passed());

        Trajectory gap = still;
        gap.times.erase(gap.times.begin() + 5, gap.times.begin() + 10);
        gap.states.erase(gap.states.begin() + 5, gap.states.begin() + 10);
        gap.cost_values.erase(gap.cost_values.begin() + 5, gap.cost_values.begin() + 10);
        CHECK_THROWS_AS((void)check_descent(gap, 0.01, 5, 1, 0, 0), InputError);
    }

    TEST_CASE("practical versus lyapunov envelopes") {
        const auto tr = simulate_es(single("classic"), State{0.0}, 10, std::nullopt, 40);
        DecayEnvelope env;
        env.m1 = 1;
        env.gamma1 = env.gamma2 = 2;
        env.x0_dist = 1;
        env.lambda = 0.45;
        env.sigma = {0, 1, 1, 15.85, 0.1};
        env.rho = 0.1;
        CHECK(check_envelope(tr, env, State{1.0}).passed());
        env.rho = 1e-4;
        CHECK_FALSE(check_envelope(tr, env, State{1.0}).passed());

        const auto ra = simulate_es(single("sd17"), State{0.0}, 10, std::nullopt, 40);
        DecayEnvelope lyap = env;
        lyap.rho = 0;
        lyap.sigma = {1.55, 3.4, 1, 15.85, 0.1};
        CHECK(fit_envelope_lambda(ra, lyap, State{1.0}) >= 1);
    }

    TEST_CASE("estimated constants for the vanishing scenario") {
        const auto est = estimate_certificate_inputs(single("sd17"), 2, 1.2, 1.6, 0.5, 41);
        const auto& in = est.inflated;
        REQUIRE(in.a4);
        CHECK(in.a4->m2 == 0);
        CHECK(in.cost.m1 == 1);
        CHECK(in.cost.gamma1 < est.raw.cost.gamma1);
        CHECK(in.L > est.raw.L);
        CHECK(in.lambda_bar == Approx(0.5 * in.a4->alpha1 * in.cost.kappa1));
        const auto c = epsilon_certificate(in);
        CHECK(c.eps_bar > 0);
        CHECK(c.eps_bar <= c.eps2);
    }
}
