#include <cmath>
#include <vector>

#include "doctest.h"
#include "esgen/costs.hpp"
#include "esgen/error.hpp"

using namespace esgen;
using doctest::Approx;

TEST_SUITE("costs") {
    TEST_CASE("builtin values and gradients") {
        const auto j1 = builtin_cost("J1");
        CHECK(j1.value(State{1.0}) == 0);
        CHECK(j1.value(State{0.0}) == Approx(2));
        CHECK(j1.gradient(State{0.0})[0] == Approx(-4));
        const auto j2 = builtin_cost("J2");
        CHECK(j2.value(State{2.0}) == Approx(2));
        CHECK(j2.gradient(State{2.0})[0] == Approx(8));
        CHECK(j1.minimizer()->at(0) == 1);
        CHECK_THROWS_AS((void)builtin_cost("J3"), ConfigError);
    }

    TEST_CASE("analytic gradient matches finite differences") {
        const std::vector<double> p{2, 0.5, -1};
        const auto q = builtin_cost("quadratic_nd", p);
        CHECK(q.dim() == 2);
        for (double s : {-1.5, -0.3, 0.4, 2.0}) {
            const State x{s, 1 - s};
            const auto g = q.gradient(x), f = q.fd_gradient(x);
            for (std::size_t i = 0; i < 2; ++i) CHECK(g[i] == Approx(f[i]).epsilon(1e-5));
        }
    }

    TEST_CASE("expression cost uses finite differences") {
        const auto c = expression_cost("(x1 - 1)^2 + 3*(x2 + 2)^2", 2, State{1, -2});
        CHECK_FALSE(c.has_analytic_gradient());
        const auto g = c.gradient(State{0, 0});
        CHECK(g[0] == Approx(-2).epsilon(1e-6));
        CHECK(g[1] == Approx(12).epsilon(1e-6));
        CHECK_NOTHROW(c.validate_minimizer());
        const auto bad = expression_cost("(x - 1)^2", 1, State{0.5});
        CHECK_THROWS_AS(bad.validate_minimizer(), ModelError);
    }

    TEST_CASE("A2 constants from closed forms") {
        const auto k1 = estimate_a2_constants(builtin_cost("J1"), 1, 100);
        CHECK(k1.m1 == 1);
        CHECK(k1.gamma1 == Approx(2));
        CHECK(k1.gamma2 == Approx(2));
        CHECK(k1.kappa1 == Approx(8).epsilon(1e-6));
        CHECK(k1.kappa2 == Approx(8).epsilon(1e-6));
        CHECK(k1.mu == Approx(4).epsilon(1e-4));

        const auto k2 = estimate_a2_constants(builtin_cost("J2"), 1, 100);
        CHECK(k2.m1 == 2);
        CHECK(k2.gamma1 == Approx(2));
        CHECK(k2.gamma2 == Approx(2));

        const std::vector<double> p{2};
        const auto kq = estimate_a2_constants(builtin_cost("quadratic_nd", p), 1, 21);
        CHECK(kq.m1 == 1);
        CHECK(kq.gamma1 == Approx(1));
        CHECK(kq.kappa2 == Approx(4).epsilon(1e-6));
        CHECK(kq.mu == Approx(2).epsilon(1e-4));
    }

    TEST_CASE("A2 verification accepts exact and rejects perturbed constants") {
        const auto j1 = builtin_cost("J1");
        const CostConstants exact{2, 2, 8, 8, 4, 1};
        CHECK(verify_a2(j1, exact, 1, 41, 1e-6).passed());
        CostConstants inflated = exact;
        inflated.kappa1 = 16;
        CHECK_FALSE(verify_a2(j1, inflated, 1, 41).passed());
        CHECK_FALSE(verify_a2(builtin_cost("J2"), exact, 1, 41).passed());
    }

    TEST_CASE("isolated minimum") {
        CHECK(check_a1(builtin_cost("J1"), 1, 41).empty());
        const auto flat = expression_cost("0*x", 1, State{0.0});
        CHECK_FALSE(check_a1(flat, 1, 41).empty());
    }
}
