#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "esgen/dithers.hpp"
#include "esgen/error.hpp"

using namespace esgen;
using doctest::Approx;

TEST_SUITE("dithers") {
    TEST_CASE("dither values") {
        const double a = 2 * std::sqrt(10 * std::numbers::pi);
        const auto [u1, u2] = eval_dither(DitherPair(1, 0.1), 0);
        CHECK(u1 == Approx(a));
        CHECK(u2 == 0);
        const auto h = eval_dither(DitherPair(1, 0.1), 0.05);
        CHECK(h.first == Approx(-a));
        CHECK(std::abs(h.second) < 1e-12);
        const auto q = eval_dither(DitherPair(2, 1), 0.125);
        CHECK(std::abs(q.first) < 1e-12);
        CHECK(q.second == Approx(2 * std::sqrt(2 * std::numbers::pi)));
        CHECK_THROWS_AS(DitherPair(0, 0.1), ConfigError);
        CHECK_THROWS_AS(DitherPair(1, -1), ConfigError);
    }

    TEST_CASE("zero mean") {
        const DitherPair d(3, 0.2);
        const Signal u1 = [d](double t) { return d(t).first; };
        const Signal u2 = [d](double t) { return d(t).second; };
        CHECK(std::abs(period_mean(u1, 0.2)) <= 1e-10 * d.amplitude());
        CHECK(std::abs(period_mean(u2, 0.2)) <= 1e-10 * d.amplitude());
    }

    TEST_CASE("beta matrix") {
        const std::vector<DitherPair> ds{DitherPair(1, 0.1), DitherPair(2, 0.1)};
        const auto b = beta(std::span<const DitherPair>(ds));
        REQUIRE(b.channels() == 4);
        CHECK(b(1, 0) == Approx(1).epsilon(1e-9));
        CHECK(b(0, 1) == Approx(-1).epsilon(1e-9));
        CHECK(b(3, 2) == Approx(1).epsilon(1e-9));
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(b(i, i)) < 1e-9);
        for (std::size_t i : {0, 1})
            for (std::size_t j : {2, 3}) {
                CHECK(std::abs(b(i, j)) < 1e-9);
                CHECK(std::abs(b(j, i)) < 1e-9);
            }
    }

    TEST_CASE("nu") {
        const double c = 2 * std::sqrt(2 * std::numbers::pi);
        const std::vector<DitherPair> one{DitherPair(1, 1)};
        CHECK(nu(one) == Approx(c));
        const std::vector<DitherPair> fine{DitherPair(1, 0.01)};
        CHECK(nu(fine) == Approx(10 * c));
        const std::vector<DitherPair> two{DitherPair(1, 1), DitherPair(4, 1)};
        CHECK(nu(two) == Approx(3 * c));
        const std::vector<DitherPair> mixed{DitherPair(1, 1), DitherPair(2, 0.5)};
        CHECK_THROWS_AS((void)common_eps(mixed), ConfigError);
    }
}
