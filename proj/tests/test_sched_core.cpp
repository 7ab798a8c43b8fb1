#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "csched/sched_core.hpp"

using namespace csched;

namespace {

std::vector<UserSpec> equal_users(int n, int m = 1) {
    std::vector<UserSpec> users;
    for (int i = 0; i < n; ++i)
        users.push_back({i, 1.0, ChannelModel::nakagami(m, 1.0), RateFunction::shannon()});
    return users;
}

std::vector<UserSpec> weighted_users(std::vector<double> weights) {
    std::vector<UserSpec> users;
    int id = 0;
    for (const double w : weights)
        users.push_back({id++, w, ChannelModel::rayleigh(1.0), RateFunction::shannon()});
    return users;
}

}  // namespace

TEST_CASE("cs_select basic argmax") {
    RngStream rng(1);
    REQUIRE(cs_select(equal_users(3), {0.2, 0.9, 0.5}, rng) == 1);
    // weights (2,1): 0.5^{1/2} = 0.7071 beats 0.6
    REQUIRE(cs_select(weighted_users({2.0, 1.0}), {0.5, 0.6}, rng) == 0);
    REQUIRE_THROWS_AS(cs_select({}, {}, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(cs_select(equal_users(2), {0.5, 1.2}, rng), std::invalid_argument);
}

TEST_CASE("cs_select CARs converge for four equal users") {
    const auto users = equal_users(4);
    RngStream rng(77);
    const std::uint64_t slots = 1'000'000;
    std::vector<std::uint64_t> counts(4, 0);
    std::vector<double> u(4);
    for (std::uint64_t t = 0; t < slots; ++t) {
        for (auto& v : u) v = rng.uniform01();
        ++counts[cs_select(users, u, rng)];
    }
    const double band = 3.0 * std::sqrt(0.25 * 0.75 / static_cast<double>(slots));
    for (const auto c : counts)
        REQUIRE(std::fabs(static_cast<double>(c) / slots - 0.25) < band);
}

TEST_CASE("weight scaling leaves the CS argmax unchanged") {
    RngStream rng(5);
    RngStream tie_rng(6);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(5));
        std::vector<double> weights(n), values(n);
        for (int i = 0; i < n; ++i) {
            weights[i] = 0.1 + 5.0 * rng.uniform01();
            values[i] = rng.uniform01();
        }
        const auto base = weighted_users(weights);
        for (const double c : {0.25, 3.0, 42.0}) {
            auto scaled_weights = weights;
            for (auto& w : scaled_weights) w *= c;
            const auto scaled = weighted_users(scaled_weights);
            REQUIRE(cs_select(base, values, tie_rng) == cs_select(scaled, values, tie_rng));
        }
    }
}

TEST_CASE("csfr_threshold algebra") {
    REQUIRE(csfr_threshold(equal_users(3), 0.027) == Approx(0.3).epsilon(1e-12));
    RngStream rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const double total = 1.0 + 99.0 * rng.uniform01();
        const auto users = weighted_users({0.4 * total, 0.6 * total});
        const double p = 0.001 + 0.998 * rng.uniform01();
        const double eta = csfr_threshold(users, p);
        REQUIRE(std::pow(eta, total) == Approx(p).epsilon(1e-12));
    }
    REQUIRE_THROWS_AS(csfr_threshold(equal_users(2), 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(csfr_threshold(equal_users(2), 1.0), std::invalid_argument);
}

TEST_CASE("csfr_step NFB branch and feedback law") {
    const auto users = weighted_users({1.0, 2.0});
    const auto alpha = cars(users);
    RngStream rng(3);
    RoundRobinState rr(users);

    SECTION("all scores below threshold give an NFB slot") {
        const auto step = csfr_step(users, {0.1, 0.1}, 0.9, alpha, rng,
                                    NfbSelection::DeterministicRR, rr);
        REQUIRE(step.slot_kind == SlotKind::NFB);
        REQUIRE(step.fed_back == std::vector<std::uint8_t>{0, 0});
    }

    SECTION("NFB frequency matches p for ten equal users") {
        const auto many = equal_users(10);
        const auto many_alpha = cars(many);
        const double p = 0.02;
        const double eta = csfr_threshold(many, p);
        RoundRobinState rr10(many);
        RngStream sim(11);
        const std::uint64_t slots = 200'000;
        std::uint64_t nfb = 0;
        std::vector<double> u(10);
        for (std::uint64_t t = 0; t < slots; ++t) {
            for (auto& v : u) v = sim.uniform01();
            const auto step =
                csfr_step(many, u, eta, many_alpha, sim, NfbSelection::WeightedRandom, rr10);
            nfb += step.slot_kind == SlotKind::NFB;
        }
        const double freq = static_cast<double>(nfb) / slots;
        REQUIRE(std::fabs(freq - p) < 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(slots)));
    }

    SECTION("weights (1,2), p=0.1: CARs converge to (1/3, 2/3)") {
        const double p = 0.1;
        const double eta = csfr_threshold(users, p);
        RngStream sim(13);
        RoundRobinState rr2(users);
        const std::uint64_t slots = 400'000;
        std::vector<std::uint64_t> counts(2, 0);
        for (std::uint64_t t = 0; t < slots; ++t) {
            const std::vector<double> u = {sim.uniform01(), sim.uniform01()};
            ++counts[csfr_step(users, u, eta, alpha, sim, NfbSelection::WeightedRandom, rr2)
                         .selected_user];
        }
        for (int i = 0; i < 2; ++i) {
            const double car = static_cast<double>(counts[i]) / slots;
            const double band =
                3.0 * std::sqrt(alpha[i] * (1 - alpha[i]) / static_cast<double>(slots));
            REQUIRE(std::fabs(car - alpha[i]) < band);
        }
    }
}

TEST_CASE("weighted round robin is exact over weight windows") {
    SECTION("equal weights alternate") {
        auto users = equal_users(2);
        RoundRobinState rr(users);
        REQUIRE(rr.next() == 0);
        REQUIRE(rr.next() == 1);
        REQUIRE(rr.next() == 0);
        REQUIRE(rr.next() == 1);
    }
    SECTION("weights (2,1) over 3000 slots select exactly (2000, 1000)") {
        auto users = weighted_users({2.0, 1.0});
        RoundRobinState rr(users);
        std::vector<int> counts(2, 0);
        for (int t = 0; t < 3000; ++t) ++counts[rr.next()];
        REQUIRE(counts[0] == 2000);
        REQUIRE(counts[1] == 1000);
    }
    SECTION("single user is always selected") {
        auto users = equal_users(1);
        RoundRobinState rr(users);
        for (int t = 0; t < 5; ++t) REQUIRE(rr.next() == 0);
    }
}

TEST_CASE("liu and df selection rules") {
    RngStream rng(2);
    const auto users = equal_users(2);
    REQUIRE(liu_select(users, {3.0, 1.0}, {0.0, 0.0}, rng) == 0);
    // Offset shifts the decision.
    REQUIRE(liu_select(users, {3.0, 1.0}, {0.0, 2.0}, rng) == 1);
    REQUIRE(df_select(users, {0.4, 0.6}, {0.0, 0.0}, rng) == 1);
    REQUIRE(df_select(users, {0.4, 0.6}, {0.3, 0.0}, rng) == 0);
    // Equal offsets and equal weights reduce DF to CS's argmax.
    const std::vector<double> u = {0.3, 0.8};
    REQUIRE(df_select(users, u, {0.1, 0.1}, rng) == cs_select(users, u, rng));
}

TEST_CASE("single user is always selected by every rule") {
    RngStream rng(4);
    const auto solo = equal_users(1);
    REQUIRE(cs_select(solo, {0.5}, rng) == 0);
    REQUIRE(liu_select(solo, {1.0}, {0.0}, rng) == 0);
    REQUIRE(df_select(solo, {0.5}, {0.0}, rng) == 0);
}

TEST_CASE("optimal threshold genie") {
    const UserSpec user{0, 1.0, ChannelModel::rayleigh(1.0), RateFunction::shannon()};
    REQUIRE(optimal_threshold_select(user, 1.0, 0.0));
    REQUIRE(optimal_threshold_select(user, 1.0, 100.0));
    const double median = std::log(2.0);
    REQUIRE(optimal_threshold_select(user, 0.5, median + 1e-9));
    REQUIRE_FALSE(optimal_threshold_select(user, 0.5, median - 1e-6));
    REQUIRE_THROWS_AS(optimal_threshold_select(user, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("offset calibration preconditions") {
    const auto users = equal_users(2);
    REQUIRE_THROWS_AS(calibrate_offsets(users, {0.5, 0.4}, OffsetPolicy::Liu),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(calibrate_offsets(users, {1.2, -0.2}, OffsetPolicy::Liu),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(calibrate_offsets(users, {0.5}, OffsetPolicy::Liu),
                      std::invalid_argument);
}

TEST_CASE("symmetric users calibrate to zero offsets immediately") {
    const auto users = equal_users(2);
    CalibrationOptions opts;
    opts.validation_slots = 200'000;
    const OffsetVector ov = calibrate_offsets(users, {0.5, 0.5}, OffsetPolicy::Liu, opts);
    REQUIRE(ov.converged);
    REQUIRE(ov.offsets == std::vector<double>{0.0, 0.0});
    REQUIRE(ov.residual < opts.tolerance);
}

TEST_CASE("single-user calibration is trivial") {
    const auto solo = equal_users(1);
    const OffsetVector ov = calibrate_offsets(solo, {1.0}, OffsetPolicy::DF);
    REQUIRE(ov.converged);
    REQUIRE(ov.residual == 0.0);
}

TEST_CASE("DF calibration reaches asymmetric targets") {
    // Identical channels, targets (0.3, 0.7): the offset must tilt selection.
    const auto users = equal_users(2);
    CalibrationOptions opts;
    opts.tolerance = 0.01;
    opts.block_slots = 150'000;
    opts.validation_slots = 150'000;
    opts.max_slots = 4'000'000;
    opts.seed = 91;
    const OffsetVector ov = calibrate_offsets(users, {0.3, 0.7}, OffsetPolicy::DF, opts);
    REQUIRE(ov.converged);
    REQUIRE(ov.residual < opts.tolerance);
    REQUIRE(ov.offsets[0] == 0.0);  // pinned gauge
    REQUIRE(ov.offsets[1] > 0.0);   // user 1 needs a boost to reach 0.7

    // Independent verification run with frozen offsets.
    RngStream sim(17);
    std::uint64_t count1 = 0;
    const std::uint64_t slots = 200'000;
    RngStream tie(18);
    for (std::uint64_t t = 0; t < slots; ++t) {
        const std::vector<double> u = {sim.uniform01(), sim.uniform01()};
        count1 += df_select(users, u, ov.offsets, tie) == 1;
    }
    REQUIRE(std::fabs(static_cast<double>(count1) / slots - 0.7) < 0.02);
}

TEST_CASE("non-convergence is reported, not silently accepted") {
    const auto users = equal_users(2);
    CalibrationOptions opts;
    opts.tolerance = 1e-9;  // unreachable with this budget
    opts.block_slots = 20'000;
    opts.validation_slots = 20'000;
    opts.max_slots = 100'000;
    const OffsetVector ov = calibrate_offsets(users, {0.3, 0.7}, OffsetPolicy::Liu, opts);
    REQUIRE_FALSE(ov.converged);
    REQUIRE(ov.residual > 0.0);
    REQUIRE(ov.iterations <= opts.max_slots + opts.validation_slots + opts.block_slots);
}

TEST_CASE("cars derives normalized access ratios") {
    const auto users = weighted_users({2.0, 6.0});
    const auto alpha = cars(users);
    REQUIRE(alpha[0] == Approx(0.25));
    REQUIRE(alpha[1] == Approx(0.75));
}
