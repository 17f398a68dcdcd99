#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "esgen/costs.hpp"
#include "esgen/dynamics.hpp"
#include "esgen/error.hpp"
#include "esgen/generators.hpp"

using namespace esgen;
using doctest::Approx;

namespace {

EsSystem single(const char* gen, double eps = 0.1, const char* cost = "J1") {
    return EsSystem(builtin_cost(cost), {Axis{builtin_generator(gen), DitherPair(1, eps)}});
}

VibSystem ex_vib(double mu, const char* gen = "classic") {
    return VibSystem([](std::span<const double> x) { return State{x[0]}; },
                     [mu](std::span<const double>) { return State{mu}; }, expression_cost("x^2", 1, State{0.0}), 1.0,
                     builtin_generator(gen), DitherPair(1, 0.1));
}

}  // namespace

TEST_SUITE("dynamics") {
    TEST_CASE("oscillatory field") {
        const double a = 2 * std::sqrt(10 * std::numbers::pi);
        CHECK(es_field(single("classic"), 0, State{0.0})[0] == Approx(2 * a));
        CHECK(es_field(single("sd17"), 0.037, State{1.0})[0] == 0);
        CHECK(es_field(single("bounded"), 0.025, State{0.0})[0] == Approx(std::cos(2.0) * a));
    }

    TEST_CASE("averaged field") {
        CHECK(lie_field(single("classic"), State{0.0})[0] == Approx(4).epsilon(1e-8));
        CHECK(lie_field(single("sd17"), State{1.0})[0] == 0);
        const std::vector<double> p{1, 1, 0, 1};
        const EsSystem pw(builtin_cost("J1"), {Axis{builtin_generator("power", p), DitherPair(1, 0.1)}});
        CHECK(lie_field(pw, State{0.0})[0] == Approx(4).epsilon(1e-8));
    }

    TEST_CASE("system invariants") {
        const std::vector<double> p{2};
        const auto q = builtin_cost("quadratic_nd", p);
        CHECK_THROWS_AS(EsSystem(q, {Axis{builtin_generator("classic"), DitherPair(1, 0.1)},
                                     Axis{builtin_generator("classic"), DitherPair(1, 0.1)}}),
                        ConfigError);
        CHECK_THROWS_AS(EsSystem(q, {Axis{builtin_generator("classic"), DitherPair(1, 0.1)}}), ConfigError);
        const EsSystem ok(q, {Axis{builtin_generator("classic"), DitherPair(1, 0.1)},
                              Axis{builtin_generator("bounded"), DitherPair(2, 0.1)}});
        CHECK(ok.beta21(0) == Approx(1).epsilon(1e-9));
        CHECK(ok.kmax() == 2);
        CHECK(ok.default_step() == Approx(0.1 / 800));
    }

    TEST_CASE("vibrational field") {
        CHECK(vib_field(ex_vib(1), 0, State{1.0}, true)[0] == Approx(-1));
        CHECK(vib_field(ex_vib(1), 0, State{0.0}, true)[0] == 0);
        CHECK(vib_field(ex_vib(2), 0, State{1.0}, true)[0] == Approx(-7));
        CHECK(ex_vib(1, "sd17").control(0.3, State{0.0}) == 0);
    }

    TEST_CASE("rk4 on linear problems") {
        const TimeField decay = [](double, std::span<const double> x) { return State{-x[0]}; };
        const auto tr = integrate(decay, State{1.0}, 1, 1e-3);
        CHECK(std::abs(tr.states.back()[0] - std::exp(-1.0)) < 1e-10);
        CHECK(tr.times.back() == 1);

        const auto lie = simulate_lie(single("classic"), State{0.0}, 2, 1e-3);
        CHECK(std::abs(lie.states.back()[0] - (1 - std::exp(-8.0))) < 1e-6);
    }

    TEST_CASE("sampling and shortened last step") {
        const TimeField f = [](double, std::span<const double> x) { return State{x[0]}; };
        const auto tr = integrate(f, State{1.0}, 1.05, 0.1, 3);
        CHECK(tr.times.back() == 1.05);
        CHECK(tr.times[1] == Approx(0.3));
        CHECK(tr.states.back()[0] == Approx(std::exp(1.05)).epsilon(1e-5));
    }

    TEST_CASE("divergence and escape") {
        const TimeField blow = [](double, std::span<const double> x) { return State{x[0] * x[0]}; };
        CHECK_THROWS_AS(integrate(blow, State{1.0}, 2, 1e-2), DivergenceError);
        const TimeField drift = [](double, std::span<const double>) { return State{1.0}; };
        try {
            (void)integrate(drift, State{0.0}, 5, 1e-2, 1, Box::around(State{0.0}, 1));
            FAIL("expected escape");
        } catch (const EscapeError& e) {
            CHECK(e.exit_time == Approx(1).epsilon(0.02));
        }
    }

    TEST_CASE("es simulation settles with a residual oscillation") {
        const auto tr = simulate_es(single("classic"), State{0.0}, 3);
        // The classic pair keeps oscillating with amplitude about sqrt(eps / pi) around x*.
        CHECK(std::abs(tr.states.back()[0] - 1) <= std::sqrt(0.1 / std::numbers::pi) + 0.02);
        const auto ra = simulate_es(single("sd17"), State{0.0}, 10, std::nullopt, 40);
        CHECK(std::abs(ra.states.back()[0] - 1) < 1e-2);
        CHECK_THROWS_AS(simulate_es(single("classic"), State{0.0}, 1, 0.1 / 333.5), ConfigError);
    }

    TEST_CASE("negative shifted cost is a model error") {
        const EsSystem s(expression_cost("x^2 - 1", 1, State{0.0}, 0.0), {Axis{builtin_generator("classic"), DitherPair(1, 0.1)}});
        CHECK_THROWS_AS((void)s.shifted_cost(State{0.0}), ModelError);
    }

    TEST_CASE("sup deviation") {
        const auto a = simulate_lie(single("classic"), State{0.0}, 1, 1e-2);
        auto b = a;
        b.states[5][0] += 0.25;
        CHECK(sup_deviation(a, b) == Approx(0.25));
        b.times.pop_back();
        b.states.pop_back();
        CHECK_THROWS_AS((void)sup_deviation(a, b), InputError);
    }
}
