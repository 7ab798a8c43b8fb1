#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "csched/fading.hpp"
#include "csched/math/stats.hpp"
#include "csched/rng.hpp"
#include "oracles.hpp"

using namespace csched;

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g;
    for (int i = 0; i < points; ++i)
        g.push_back(lo * std::exp(std::log(hi / lo) * i / (points - 1)));
    return g;
}

}  // namespace

TEST_CASE("Rayleigh CDF basics") {
    const ChannelModel ch = ChannelModel::rayleigh(1.0);
    REQUIRE(ch.cdf(std::log(2.0)) == Approx(0.5).epsilon(1e-14));
    REQUIRE(ch.cdf(0.0) == 0.0);
    REQUIRE_THROWS_AS(ch.cdf(-0.1), std::domain_error);
    REQUIRE_THROWS_AS(ChannelModel::nakagami(0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ChannelModel::nakagami(2, -1.0), std::invalid_argument);
}

TEST_CASE("Nakagami-4 CDF agrees with density integration") {
    const ChannelModel ch = ChannelModel::nakagami(4, 1.0);
    const double reference = oracle::simpson(
        [](double g) { return oracle::gamma_density(4, 1.0, g); }, 0.0, 1.0, 400000);
    REQUIRE(ch.cdf(1.0) == Approx(reference).margin(1e-10));
}

TEST_CASE("CDF is nondecreasing on any increasing grid") {
    for (const int m : {1, 3, 6}) {
        const ChannelModel ch = ChannelModel::nakagami(m, 2.0);
        double prev = -1.0;
        for (const double g : log_grid(1e-8, 200.0, 300)) {
            const double f = ch.cdf(g);
            REQUIRE(f >= prev);
            REQUIRE(f <= 1.0);
            prev = f;
        }
    }
}

TEST_CASE("inverse CDF endpoints and domain errors") {
    const ChannelModel ch = ChannelModel::rayleigh(1.0);
    REQUIRE(ch.inverse_cdf(0.0) == 0.0);
    REQUIRE(ch.inverse_cdf(1.0 - std::exp(-1.0)) == Approx(1.0).epsilon(1e-9));
    REQUIRE_THROWS_AS(ch.inverse_cdf(1.0), std::domain_error);
    REQUIRE_THROWS_AS(ch.inverse_cdf(-0.01), std::domain_error);
    REQUIRE_THROWS_AS(ch.inverse_cdf(1.01), std::domain_error);
    REQUIRE_THROWS_AS(ch.inverse_sf(0.0), std::domain_error);
}

TEST_CASE("quantile round-trips to 1e-9 relative") {
    for (const int m : {1, 2, 4}) {
        for (const double mean : {1.0, 2.0, 17.0}) {
            const ChannelModel ch = ChannelModel::nakagami(m, mean);
            for (const double g : log_grid(1e-6 * mean, 50.0 * mean, 120)) {
                // Paired inversion from the well-conditioned side covers the
                // whole range; the cdf-value route alone cannot represent the
                // deep upper tail in doubles (1 - F rounds to 0 there).
                const double u = ch.cdf(g);
                const double q = ch.sf(g);
                const double back = q < 0.5 ? ch.inverse_sf(q) : ch.inverse_cdf(u);
                REQUIRE(back == Approx(g).epsilon(1e-9));
                if (q >= 1e-6) REQUIRE(ch.inverse_cdf(u) == Approx(g).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("spec example: m=4 mean=2 u=0.9 round-trips") {
    const ChannelModel ch = ChannelModel::nakagami(4, 2.0);
    const double g = ch.inverse_cdf(0.9);
    REQUIRE(ch.cdf(g) == Approx(0.9).margin(1e-9));
}

TEST_CASE("inverse_cdf residual stays below 1e-10") {
    const ChannelModel ch = ChannelModel::nakagami(3, 5.0);
    for (const double u : {1e-12, 1e-6, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-9})
        REQUIRE(ch.cdf(ch.inverse_cdf(u)) == Approx(u).margin(1e-10));
}

TEST_CASE("constant channel is a step distribution") {
    const ChannelModel ch = ChannelModel::constant(2.5);
    REQUIRE(ch.cdf(2.4999) == 0.0);
    REQUIRE(ch.cdf(2.5) == 1.0);
    REQUIRE(ch.inverse_cdf(0.3) == 2.5);
    REQUIRE(ch.inverse_cdf(0.9999) == 2.5);
    REQUIRE(ch.inverse_cdf(1.0) == 2.5);  // bounded support: u = 1 has a preimage
    RngStream rng(7);
    for (int i = 0; i < 16; ++i) REQUIRE(ch.sample(rng) == 2.5);
    REQUIRE_THROWS_AS(ch.cdf_value(rng), std::domain_error);
    // draw() spans the jump with a uniform value instead.
    math::RunningStats u_stats;
    for (int i = 0; i < 20000; ++i) u_stats.add(ch.draw(rng).cdf_value);
    REQUIRE(u_stats.mean() == Approx(0.5).margin(0.01));
}

TEST_CASE("sampling matches the analytic law") {
    const std::size_t n = 1'000'000;

    SECTION("exponential mean, m=1") {
        const ChannelModel ch = ChannelModel::rayleigh(1.0);
        RngStream rng(1234);
        math::RunningStats stats;
        for (std::size_t i = 0; i < n; ++i) stats.add(ch.sample(rng));
        REQUIRE(std::fabs(stats.mean() - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)));
    }

    SECTION("KS against the exact CDF, m=4") {
        const ChannelModel ch = ChannelModel::nakagami(4, 1.0);
        RngStream rng(99);
        std::vector<double> sample(n);
        for (auto& v : sample) v = ch.sample(rng);
        const double d = math::ks_distance(sample, [&](double g) { return ch.cdf(g); });
        REQUIRE(d < math::ks_critical_1pct(n));
    }

    SECTION("mean within four standard errors, m=4 mean=3") {
        const ChannelModel ch = ChannelModel::nakagami(4, 3.0);
        RngStream rng(5);
        math::RunningStats stats;
        for (std::size_t i = 0; i < n; ++i) stats.add(ch.sample(rng));
        const double se = 3.0 / std::sqrt(4.0 * static_cast<double>(n));
        REQUIRE(std::fabs(stats.mean() - 3.0) < 4.0 * se);
    }
}

TEST_CASE("probability integral transform: CDF values are uniform") {
    const std::size_t n = 1'000'000;
    std::vector<double> u1(n), u4(n);
    {
        const ChannelModel ch = ChannelModel::rayleigh(1.0);
        RngStream rng(42);
        for (auto& v : u1) v = ch.cdf_value(rng);
    }
    {
        const ChannelModel ch = ChannelModel::nakagami(4, 2.0);
        RngStream rng(43);
        for (auto& v : u4) v = ch.cdf_value(rng);
    }
    const auto uniform = [](double u) { return u; };
    REQUIRE(math::ks_distance(u1, uniform) < math::ks_critical_1pct(n));
    REQUIRE(math::ks_distance(u4, uniform) < math::ks_critical_1pct(n));
    // Same uniform law regardless of the underlying fading shape.
    REQUIRE(math::ks_two_sample(u1, u4) < math::ks_two_sample_critical_1pct(n, n));
}

TEST_CASE("cdf_value is cdf(sample) by construction for continuous channels") {
    const ChannelModel ch = ChannelModel::nakagami(2, 1.5);
    RngStream rng(11);
    for (int i = 0; i < 100; ++i) {
        const ChannelDraw d = ch.draw(rng);
        REQUIRE(d.cdf_value == ch.cdf(d.snr));
    }
}

TEST_CASE("empirical channel interpolates its table") {
    const ChannelModel ch = ChannelModel::empirical({{0.0, 0.0}, {1.0, 0.25}, {3.0, 1.0}});
    REQUIRE(ch.cdf(0.5) == Approx(0.125));
    REQUIRE(ch.cdf(2.0) == Approx(0.625));
    REQUIRE(ch.cdf(5.0) == 1.0);
    REQUIRE(ch.inverse_cdf(0.125) == Approx(0.5));
    REQUIRE(ch.inverse_cdf(1.0) == Approx(3.0));
    RngStream rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double g = ch.sample(rng);
        REQUIRE(g >= 0.0);
        REQUIRE(g <= 3.0);
    }
    REQUIRE_THROWS_AS(ChannelModel::empirical({{0.0, 0.0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(ChannelModel::empirical({{0.0, 0.1}, {1.0, 1.0}}),
                      std::invalid_argument);
}

TEST_CASE("dB conversion round-trip") {
    REQUIRE(db_to_linear(0.0) == 1.0);
    REQUIRE(db_to_linear(10.0) == Approx(10.0));
    REQUIRE(linear_to_db(db_to_linear(7.3)) == Approx(7.3).epsilon(1e-12));
}

TEST_CASE("rate functions") {
    const RateFunction shannon = RateFunction::shannon();
    REQUIRE(shannon.rate(0.0) == 0.0);
    REQUIRE(shannon.rate(1.0) == Approx(1.0));
    REQUIRE(shannon.rate(3.0) == Approx(2.0));
    REQUIRE_THROWS_AS(shannon.rate(-1.0), std::domain_error);

    const RateFunction capped = RateFunction::capped_shannon(2.0);
    REQUIRE(capped.cap_snr() == Approx(3.0));
    REQUIRE(capped.rate(2.9) == Approx(std::log2(3.9)));
    REQUIRE(capped.rate(50.0) == 2.0);

    const RateFunction mcs = RateFunction::table_mcs({{1.0, 0.5}, {4.0, 1.5}});
    REQUIRE(mcs.rate(0.5) == 0.0);
    REQUIRE(mcs.rate(1.0) == 0.5);
    REQUIRE(mcs.rate(3.9) == 0.5);
    REQUIRE(mcs.rate(4.0) == 1.5);
    REQUIRE_THROWS_AS(RateFunction::table_mcs({{1.0, 0.5}, {0.5, 1.0}}),
                      std::invalid_argument);
}
