#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "csched/fairness.hpp"
#include "csched/montecarlo.hpp"

using namespace csched;

TEST_CASE("D upper bound formula") {
    REQUIRE(d_ub(1.0) == 0.5);
    REQUIRE(d_ub(0.3) == Approx(0.85));
    REQUIRE(d_ub(1e-12) == Approx(1.0).epsilon(1e-9));
    REQUIRE_THROWS_AS(d_ub(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(d_ub(1.5), std::invalid_argument);
}

TEST_CASE("CS diversity index formula") {
    REQUIRE(i_d_cs(0.5) == Approx(8.0 / 9.0).epsilon(1e-15));
    REQUIRE(i_d_cs(1.0) == Approx(1.0).epsilon(1e-15));
    REQUIRE(i_d_cs(0.1) == Approx(2.0 / (1.1 * 1.9)).epsilon(1e-15));
    // Minimized at alpha = 1/2, never below 8/9.
    for (int i = 1; i <= 99; ++i) {
        const double alpha = i / 100.0;
        REQUIRE(i_d_cs(alpha) >= 8.0 / 9.0 - 1e-15);
        REQUIRE(i_d_cs(alpha) <= 1.0 + 1e-15);
    }
    REQUIRE(d_cs(0.5) == Approx(2.0 / 3.0));
}

TEST_CASE("empirical D estimator") {
    math::RunningStats stats;
    REQUIRE_THROWS_AS(empirical_d(stats), std::invalid_argument);  // too few selections
    RngStream rng(21);
    for (int i = 0; i < 5000; ++i) stats.add(rng.uniform01());
    const EmpiricalD d = empirical_d(stats);
    REQUIRE(d.selections == 5000);
    REQUIRE(std::fabs(d.d_value - 0.5) < 3.0 * d.standard_error);
    REQUIRE(d.standard_error == Approx(1.0 / std::sqrt(12.0 * 5000.0)).epsilon(0.05));
}

TEST_CASE("qfi is the worst per-user index") {
    REQUIRE(qfi({0.97}) == 0.97);
    REQUIRE(qfi({0.9, 0.95, 0.88}) == 0.88);
    REQUIRE_THROWS_AS(qfi({}), std::invalid_argument);
}

TEST_CASE("fairness laws hold in simulation") {
    SimConfig cfg;
    cfg.users = {
        {0, 0.5, ChannelModel::rayleigh(1.0), RateFunction::shannon()},
        {1, 0.5, ChannelModel::nakagami(4, 1.0), RateFunction::shannon()},
    };
    cfg.num_slots = 100'000;
    cfg.num_replicas = 2;
    cfg.master_seed = 314;

    SECTION("CS: D = 1/(1+alpha) regardless of fading shape") {
        const MetricsReport rep = run(cfg);
        for (const auto& u : rep.users)
            REQUIRE(std::fabs(u.mean_selected_cdf - 2.0 / 3.0) <=
                    3.0 * u.mean_selected_cdf_stderr);
        const FairnessReport fr = fairness_from_report(rep);
        REQUIRE(fr.qfi >= 8.0 / 9.0 - 0.01);
        REQUIRE(fr.d_ub == std::vector<double>{0.75, 0.75});
    }

    SECTION("RRS: D pins to 1/2") {
        cfg.policy.kind = PolicyKind::RRS;
        const MetricsReport rep = run(cfg);
        for (const auto& u : rep.users)
            REQUIRE(std::fabs(u.mean_selected_cdf - 0.5) <= 3.0 * u.mean_selected_cdf_stderr);
        const FairnessReport fr = fairness_from_report(rep);
        // RRS diversity index is 0.5 / D_UB = 1/(2 - alpha).
        for (std::size_t i = 0; i < 2; ++i)
            REQUIRE(fr.i_d[i] == Approx(1.0 / (2.0 - 0.5)).margin(0.01));
    }

    SECTION("genie achieves the D upper bound") {
        SimConfig genie;
        genie.users = {{0, 1.0, ChannelModel::rayleigh(1.0), RateFunction::shannon()}};
        genie.policy.kind = PolicyKind::OptimalThreshold;
        genie.policy.target_car = 0.4;
        genie.num_slots = 200'000;
        genie.master_seed = 271;
        const MetricsReport rep = run(genie);
        REQUIRE(std::fabs(rep.users[0].mean_selected_cdf - d_ub(0.4)) <=
                3.0 * rep.users[0].mean_selected_cdf_stderr);
    }
}

TEST_CASE("fairness report rejects mismatched inputs") {
    std::vector<math::RunningStats> stats(2);
    REQUIRE_THROWS_AS(fairness_report(stats, {0.5}), std::invalid_argument);
}
