#include <catch2/catch.hpp>

#include <cmath>

#include "csched/math/special.hpp"
#include "oracles.hpp"

using namespace csched;

TEST_CASE("exp1 matches direct integration of e^{-t}/t") {
    for (const double z : {0.1, 0.5, 0.99, 1.0, 1.01, 2.0, 5.0, 10.0}) {
        const double reference =
            oracle::simpson([](double t) { return std::exp(-t) / t; }, z, z + 60.0, 400000);
        REQUIRE(math::exp1(z) == Approx(reference).epsilon(1e-11));
    }
}

TEST_CASE("exp1 rejects non-positive arguments") {
    REQUIRE_THROWS_AS(math::exp1(0.0), std::domain_error);
    REQUIRE_THROWS_AS(math::exp1(-1.0), std::domain_error);
}

TEST_CASE("exp1_scaled equals e^z E1(z) and survives deep arguments") {
    for (const double z : {0.2, 0.9, 1.5, 30.0, 300.0})
        REQUIRE(math::exp1_scaled(z) * std::exp(-z) == Approx(math::exp1(z)).epsilon(1e-13));
    // Asymptotically e^z E1(z) ~ 1/z.
    REQUIRE(math::exp1_scaled(800.0) * 800.0 == Approx(1.0).margin(0.01));
    REQUIRE(std::isfinite(math::exp1_scaled(5000.0)));
}

TEST_CASE("regularized incomplete gamma matches density integration") {
    for (const int m : {1, 2, 4, 8}) {
        for (const double x : {0.05, 0.5, 1.0, 3.0, 7.5, 20.0}) {
            const double mean = static_cast<double>(m);  // makes snr == x
            const double reference = oracle::simpson(
                [&](double g) { return oracle::gamma_density(m, mean, g); }, 0.0, x, 200000);
            REQUIRE(math::gamma_p_int(m, x) == Approx(reference).epsilon(1e-10));
        }
    }
}

TEST_CASE("incomplete gamma split keeps relative accuracy in the small-x corner") {
    // P(m, x) ~ x^m / m! as x -> 0; the complement form would cancel here.
    for (const int m : {2, 4, 6}) {
        const double x = 1e-5;
        const double leading = std::pow(x, m) / oracle::factorial(m);
        REQUIRE(math::gamma_p_int(m, x) == Approx(leading).epsilon(1e-4));
    }
}

TEST_CASE("P and Q are complementary") {
    for (const int m : {1, 3, 5})
        for (const double x : {0.2, 1.0, 4.0, 9.0})
            REQUIRE(math::gamma_p_int(m, x) + math::gamma_q_int(m, x) ==
                    Approx(1.0).epsilon(1e-14));
}

TEST_CASE("binomial coefficients") {
    REQUIRE(math::binomial(10, 5) == 252.0);
    REQUIRE(math::binomial(52, 5) == 2598960.0);
    REQUIRE(math::binomial(7, 0) == 1.0);
    REQUIRE(math::binomial(7, 7) == 1.0);
    REQUIRE(math::binomial(7, 9) == 0.0);
    const double big = math::binomial(400, 200);
    const double lg = std::exp(std::lgamma(401.0) - 2.0 * std::lgamma(201.0));
    REQUIRE(big == Approx(lg).epsilon(1e-10));
}
