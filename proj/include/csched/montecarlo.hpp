#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "csched/fading.hpp"
#include "csched/fairness.hpp"
#include "csched/math/stats.hpp"
#include "csched/rng.hpp"
#include "csched/sched_core.hpp"

namespace csched {

using math::ks_critical_1pct;
using math::ks_distance;
using math::ks_two_sample;
using math::ks_two_sample_critical_1pct;

enum class PolicyKind { CS, CSFR, RRS, Liu, DF, OptimalThreshold };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::CS;
    double nfb_probability = 0.0;  // CS-FR knob p
    NfbSelection nfb_selection = NfbSelection::WeightedRandom;
    std::vector<double> offsets;   // Liu/DF offsets; must be set (zeros are allowed)
    bool offsets_provided = false;
    double target_car = 1.0;       // OptimalThreshold genie
};

struct SimConfig {
    std::vector<UserSpec> users;
    PolicyConfig policy;
    std::uint64_t num_slots = 1'000'000;
    int num_replicas = 1;
    std::uint64_t master_seed = 1;
    std::uint64_t warmup_slots = 0;
    int threads = 1;  // parallelism degree only; never affects the numbers
    std::size_t reservoir_capacity = 10'000;
};

struct UserMetrics {
    std::uint64_t selected_count = 0;
    std::uint64_t feedback_count = 0;
    double car = 0.0;
    double car_stderr = 0.0;
    double throughput = 0.0;  // bits/slot
    double throughput_stderr = 0.0;
    double mean_selected_cdf = 0.0;
    double mean_selected_cdf_stderr = 0.0;
    math::RunningStats selected_cdf_stats;    // fairness input (D estimator)
    std::vector<double> selected_snr_sample;  // uniform subsample of selected-slot SNRs
};

struct MetricsReport {
    std::vector<UserMetrics> users;
    std::vector<double> alphas;
    double mean_feedback_per_slot = 0.0;
    double mean_feedback_stderr = 0.0;
    double nfb_frequency = 0.0;
    double nfb_frequency_stderr = 0.0;
    std::uint64_t total_slots = 0;
    std::uint64_t slots_per_replica = 0;
    int replicas = 0;
};

using TraceSink = std::function<void(const SlotTrace&)>;

namespace detail {

// Bounded uniform subsample of a value stream (algorithm R). Draws its
// randomness from a dedicated stream so attaching a reservoir never
// perturbs the simulation itself.
class Reservoir {
  public:
    Reservoir(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {}

    void offer(double value) {
        ++seen_;
        if (values_.size() < capacity_) {
            values_.push_back(value);
            return;
        }
        const std::size_t slot = rng_.uniform_index(seen_);
        if (slot < capacity_) values_[slot] = value;
    }

    std::vector<double>& values() { return values_; }

  private:
    std::size_t capacity_;
    std::size_t seen_ = 0;
    std::vector<double> values_;
    RngStream rng_;
};

struct ReplicaResult {
    std::vector<std::uint64_t> selected;
    std::vector<std::uint64_t> fed_back;
    std::vector<double> rate_sum;
    std::vector<double> rate_sum_sq;
    std::vector<math::RunningStats> selected_cdf;
    std::vector<Reservoir> reservoirs;
    std::uint64_t nfb_slots = 0;
    std::uint64_t feedback_total = 0;
    std::uint64_t feedback_total_sq = 0;
    std::uint64_t counted_slots = 0;
    std::vector<SlotTrace> traces;
};

inline constexpr std::uint64_t reservoir_salt = 0x9e5e9701ULL;

}  // namespace detail

// Slot-driven Monte Carlo run. Deterministic for a fixed (config, seed):
// every replica owns rng streams derived from (master_seed, replica index),
// and replica results merge in index order, so the thread count never
// changes a single bit of the report.
inline MetricsReport run(const SimConfig& config, const TraceSink& sink = {}) {
    validate_users(config.users);
    if (config.num_slots < 1) throw std::invalid_argument("run: num_slots must be >= 1");
    if (config.num_replicas < 1) throw std::invalid_argument("run: num_replicas must be >= 1");
    const std::size_t n = config.users.size();
    const PolicyKind kind = config.policy.kind;

    if ((kind == PolicyKind::Liu || kind == PolicyKind::DF) && !config.policy.offsets_provided)
        throw std::invalid_argument("run: Liu/DF require calibrated (or explicitly zero) offsets");
    if (kind == PolicyKind::OptimalThreshold && n != 1)
        throw std::invalid_argument("run: the optimal-threshold genie is single-user");
    std::vector<double> offsets = config.policy.offsets;
    if (offsets.empty()) offsets.assign(n, 0.0);
    if (offsets.size() != n) throw std::invalid_argument("run: offsets size mismatch");

    const std::vector<double> alpha = cars(config.users);
    const double eta_th = kind == PolicyKind::CSFR
                              ? csfr_threshold(config.users, config.policy.nfb_probability)
                              : 0.5;

    const std::size_t replica_capacity =
        std::max<std::size_t>(1, config.reservoir_capacity /
                                     static_cast<std::size_t>(config.num_replicas));

    auto run_replica = [&](int replica, bool keep_traces) {
        detail::ReplicaResult out;
        out.selected.assign(n, 0);
        out.fed_back.assign(n, 0);
        out.rate_sum.assign(n, 0.0);
        out.rate_sum_sq.assign(n, 0.0);
        out.selected_cdf.assign(n, {});
        for (std::size_t i = 0; i < n; ++i)
            out.reservoirs.emplace_back(
                replica_capacity,
                stream_seed(config.master_seed,
                            detail::reservoir_salt + replica * n + i));

        RngStream rng(config.master_seed, static_cast<std::uint64_t>(replica));
        RoundRobinState rr(config.users);
        std::vector<double> snr(n), cdfv(n);
        std::vector<std::uint8_t> fed(n, 1);

        for (std::uint64_t t = 0; t < config.num_slots + config.warmup_slots; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                const ChannelDraw d = config.users[i].channel.draw(rng);
                snr[i] = d.snr;
                cdfv[i] = d.cdf_value;
            }

            std::size_t sel = 0;
            SlotKind slot_kind = SlotKind::FB;
            std::uint64_t feedback_this_slot = 0;
            bool served = true;
            switch (kind) {
                case PolicyKind::CS:
                    sel = cs_select(config.users, cdfv, rng);
                    std::fill(fed.begin(), fed.end(), 1);
                    feedback_this_slot = n;
                    break;
                case PolicyKind::CSFR: {
                    const CsfrStepResult step = csfr_step(config.users, cdfv, eta_th, alpha,
                                                          rng, config.policy.nfb_selection, rr);
                    sel = step.selected_user;
                    slot_kind = step.slot_kind;
                    fed = step.fed_back;
                    for (std::uint8_t f : fed) feedback_this_slot += f;
                    break;
                }
                case PolicyKind::RRS:
                    sel = rr.next();
                    std::fill(fed.begin(), fed.end(), 0);
                    break;
                case PolicyKind::Liu:
                    sel = liu_select(config.users, snr, offsets, rng);
                    std::fill(fed.begin(), fed.end(), 1);
                    feedback_this_slot = n;
                    break;
                case PolicyKind::DF:
                    sel = df_select(config.users, cdfv, offsets, rng);
                    std::fill(fed.begin(), fed.end(), 1);
                    feedback_this_slot = n;
                    break;
                case PolicyKind::OptimalThreshold:
                    sel = 0;
                    served = optimal_threshold_select(config.users[0],
                                                      config.policy.target_car, snr[0]);
                    fed[0] = 1;
                    feedback_this_slot = 1;
                    break;
            }

            if (t < config.warmup_slots) continue;
            ++out.counted_slots;
            out.feedback_total += feedback_this_slot;
            out.feedback_total_sq += feedback_this_slot * feedback_this_slot;
            for (std::size_t i = 0; i < n; ++i) out.fed_back[i] += fed[i];
            if (slot_kind == SlotKind::NFB) ++out.nfb_slots;

            double rate = 0.0;
            if (served) {
                rate = config.users[sel].rate_fn.rate(snr[sel]);
                ++out.selected[sel];
                out.rate_sum[sel] += rate;
                out.rate_sum_sq[sel] += rate * rate;
                out.selected_cdf[sel].add(cdfv[sel]);
                out.reservoirs[sel].offer(snr[sel]);
            }

            if (keep_traces) {
                SlotTrace trace;
                trace.slot_index = t - config.warmup_slots;
                trace.snr = snr;
                trace.cdf_value = cdfv;
                trace.fed_back = fed;
                trace.selected_user = sel;
                trace.slot_kind = slot_kind;
                trace.achieved_rate = rate;
                out.traces.push_back(std::move(trace));
            }
        }
        return out;
    };

    std::vector<detail::ReplicaResult> results(static_cast<std::size_t>(config.num_replicas));
    const int threads = std::max(1, std::min(config.threads, config.num_replicas));
    if (threads == 1) {
        for (int r = 0; r < config.num_replicas; ++r)
            results[static_cast<std::size_t>(r)] = run_replica(r, static_cast<bool>(sink));
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < config.num_replicas; r = next.fetch_add(1))
                    results[static_cast<std::size_t>(r)] = run_replica(r, static_cast<bool>(sink));
            });
        for (auto& th : pool) th.join();
    }

    if (sink)
        for (const auto& r : results)
            for (const auto& trace : r.traces) sink(trace);

    MetricsReport report;
    report.alphas = alpha;
    report.replicas = config.num_replicas;
    report.slots_per_replica = config.num_slots;
    report.users.resize(n);

    std::uint64_t total_slots = 0;
    std::uint64_t total_feedback = 0;
    std::uint64_t total_feedback_sq = 0;
    std::uint64_t total_nfb = 0;
    for (const auto& r : results) {
        total_slots += r.counted_slots;
        total_feedback += r.feedback_total;
        total_feedback_sq += r.feedback_total_sq;
        total_nfb += r.nfb_slots;
    }
    report.total_slots = total_slots;
    report.mean_feedback_per_slot = static_cast<double>(total_feedback) / total_slots;
    report.nfb_frequency = static_cast<double>(total_nfb) / total_slots;
    {
        const double mean = report.mean_feedback_per_slot;
        const double second = static_cast<double>(total_feedback_sq) / total_slots;
        report.mean_feedback_stderr = std::sqrt(std::max(0.0, second - mean * mean) / total_slots);
        report.nfb_frequency_stderr = std::sqrt(
            std::max(0.0, report.nfb_frequency * (1.0 - report.nfb_frequency)) / total_slots);
    }

    for (std::size_t i = 0; i < n; ++i) {
        UserMetrics& u = report.users[i];
        math::RunningStats cdf_stats;
        math::RunningStats replica_throughput;
        double rate_sum = 0.0;
        double rate_sum_sq = 0.0;
        for (auto& r : results) {
            u.selected_count += r.selected[i];
            u.feedback_count += r.fed_back[i];
            rate_sum += r.rate_sum[i];
            rate_sum_sq += r.rate_sum_sq[i];
            cdf_stats.merge(r.selected_cdf[i]);
            replica_throughput.add(r.rate_sum[i] / r.counted_slots);
            auto& sample = r.reservoirs[i].values();
            u.selected_snr_sample.insert(u.selected_snr_sample.end(), sample.begin(),
                                         sample.end());
        }
        const double nt = static_cast<double>(total_slots);
        u.car = static_cast<double>(u.selected_count) / nt;
        u.car_stderr = std::sqrt(std::max(0.0, u.car * (1.0 - u.car)) / nt);
        u.throughput = rate_sum / nt;
        if (config.num_replicas >= 2) {
            u.throughput_stderr = replica_throughput.stderr_of_mean();
        } else {
            const double second_moment = rate_sum_sq / nt;
            const double var = std::max(0.0, second_moment - u.throughput * u.throughput);
            u.throughput_stderr = std::sqrt(var / nt);
        }
        if (cdf_stats.count() > 0) {
            u.mean_selected_cdf = cdf_stats.mean();
            u.mean_selected_cdf_stderr = cdf_stats.stderr_of_mean();
        }
        u.selected_cdf_stats = cdf_stats;
    }
    return report;
}

// Per-user fairness report straight from a finished run.
inline FairnessReport fairness_from_report(const MetricsReport& report,
                                           std::uint64_t min_selections = 1000) {
    std::vector<math::RunningStats> stats;
    stats.reserve(report.users.size());
    for (const auto& u : report.users) stats.push_back(u.selected_cdf_stats);
    return fairness_report(stats, report.alphas, min_selections);
}

}  // namespace csched
