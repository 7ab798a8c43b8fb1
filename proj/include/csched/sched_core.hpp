#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "csched/fading.hpp"
#include "csched/rng.hpp"

namespace csched {

// One scheduled user: positive weight, channel statistics, rate mapping.
struct UserSpec {
    int user_id = 0;
    double weight = 1.0;
    ChannelModel channel = ChannelModel::rayleigh(1.0);
    RateFunction rate_fn = RateFunction::shannon();
};

inline void validate_users(const std::vector<UserSpec>& users) {
    if (users.empty()) throw std::invalid_argument("user list is empty");
    for (const auto& u : users)
        if (!(u.weight > 0.0)) throw std::invalid_argument("user weight must be positive");
}

// Channel access ratios alpha_i = w_i / sum_j w_j.
inline std::vector<double> cars(const std::vector<UserSpec>& users) {
    validate_users(users);
    double total = 0.0;
    for (const auto& u : users) total += u.weight;
    std::vector<double> alpha(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) alpha[i] = users[i].weight / total;
    return alpha;
}

inline double total_weight(const std::vector<UserSpec>& users) {
    double total = 0.0;
    for (const auto& u : users) total += u.weight;
    return total;
}

enum class SlotKind { FB, NFB };

// Per-slot record. Exactly one user is selected in every slot; NFB marks
// the CS-FR slots in which nobody fed back and round robin filled in.
struct SlotTrace {
    std::uint64_t slot_index = 0;
    std::vector<double> snr;
    std::vector<double> cdf_value;
    std::vector<std::uint8_t> fed_back;
    std::size_t selected_user = 0;
    SlotKind slot_kind = SlotKind::FB;
    double achieved_rate = 0.0;
};

namespace detail {

// Uniform pick from the argmax set of `score`. Ties have probability zero
// for continuous channels; breaking them uniformly keeps CARs symmetric
// for degenerate (Constant / table) inputs.
inline std::size_t argmax_random_tie(const std::vector<double>& score, RngStream& rng) {
    std::size_t best = 0;
    int ties = 1;
    for (std::size_t i = 1; i < score.size(); ++i) {
        if (score[i] > score[best]) {
            best = i;
            ties = 1;
        } else if (score[i] == score[best]) {
            ++ties;
        }
    }
    if (ties == 1) return best;
    std::size_t pick = rng.uniform_index(static_cast<std::size_t>(ties));
    for (std::size_t i = best; i < score.size(); ++i) {
        if (score[i] == score[best]) {
            if (pick == 0) return i;
            --pick;
        }
    }
    return best;
}

}  // namespace detail

// CS feedback score in log domain: ln(u) / w is a monotone transform of
// u^{1/w}, and dividing every score by a common factor preserves the
// floating-point order exactly (weight-scaling invariance).
inline double cs_score(double cdf_value, double weight) {
    if (cdf_value <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(cdf_value) / weight;
}

// CS selection rule: argmax_i cdf_value_i^{1/w_i}.
inline std::size_t cs_select(const std::vector<UserSpec>& users,
                             const std::vector<double>& cdf_values, RngStream& rng) {
    validate_users(users);
    if (cdf_values.size() != users.size())
        throw std::invalid_argument("cs_select: cdf_values size mismatch");
    std::vector<double> score(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (cdf_values[i] < 0.0 || cdf_values[i] > 1.0)
            throw std::invalid_argument("cs_select: cdf value outside [0, 1]");
        score[i] = cs_score(cdf_values[i], users[i].weight);
    }
    return detail::argmax_random_tie(score, rng);
}

// Common CS-FR threshold: eta = p^{1 / sum_j w_j}. One value serves every
// user regardless of weights.
inline double csfr_threshold(const std::vector<UserSpec>& users, double nfb_probability) {
    validate_users(users);
    if (!(nfb_probability > 0.0) || !(nfb_probability < 1.0))
        throw std::invalid_argument("csfr_threshold: p must lie in (0, 1)");
    return std::pow(nfb_probability, 1.0 / total_weight(users));
}

// Deterministic weighted round robin (credit scheduler). With integer
// weights, any window of sum(w) slots selects user i exactly w_i times.
class RoundRobinState {
  public:
    explicit RoundRobinState(const std::vector<UserSpec>& users) {
        validate_users(users);
        credits_.assign(users.size(), 0.0);
        for (const auto& u : users) weights_.push_back(u.weight);
        total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    }

    std::size_t next() {
        std::size_t best = 0;
        for (std::size_t i = 0; i < credits_.size(); ++i) {
            credits_[i] += weights_[i];
            if (credits_[i] > credits_[best]) best = i;
        }
        credits_[best] -= total_;
        return best;
    }

  private:
    std::vector<double> credits_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

inline std::size_t rrs_select(RoundRobinState& state) { return state.next(); }

// How CS-FR fills NFB slots. WeightedRandom keeps slots i.i.d. (the
// default, matching the selected-SNR law analysis); DeterministicRR is
// the credit scheduler.
enum class NfbSelection { WeightedRandom, DeterministicRR };

inline std::size_t weighted_random_select(const std::vector<double>& alpha, RngStream& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        acc += alpha[i];
        if (u < acc) return i;
    }
    return alpha.size() - 1;
}

struct CsfrStepResult {
    std::size_t selected_user = 0;
    SlotKind slot_kind = SlotKind::FB;
    std::vector<std::uint8_t> fed_back;
};

// One CS-FR slot: user i feeds back iff cdf_value_i^{1/w_i} > eta_th; the
// best feeder wins, and an empty feedback set falls through to the NFB
// selection rule.
inline CsfrStepResult csfr_step(const std::vector<UserSpec>& users,
                                const std::vector<double>& cdf_values, double eta_th,
                                const std::vector<double>& alpha, RngStream& rng,
                                NfbSelection nfb_mode, RoundRobinState& rr_state) {
    if (!(eta_th > 0.0) || !(eta_th < 1.0))
        throw std::invalid_argument("csfr_step: threshold must lie in (0, 1)");
    const double log_eta = std::log(eta_th);
    CsfrStepResult result;
    result.fed_back.assign(users.size(), 0);

    std::vector<double> score(users.size(), -std::numeric_limits<double>::infinity());
    bool any = false;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const double s = cs_score(cdf_values[i], users[i].weight);
        if (s > log_eta) {
            score[i] = s;
            result.fed_back[i] = 1;
            any = true;
        }
    }
    if (any) {
        result.slot_kind = SlotKind::FB;
        result.selected_user = detail::argmax_random_tie(score, rng);
    } else {
        result.slot_kind = SlotKind::NFB;
        result.selected_user = nfb_mode == NfbSelection::WeightedRandom
                                   ? weighted_random_select(alpha, rng)
                                   : rr_state.next();
    }
    return result;
}

// Liu's rule: argmax_i R_i(snr_i) + c_i.
inline std::size_t liu_select(const std::vector<UserSpec>& users,
                              const std::vector<double>& snrs,
                              const std::vector<double>& offsets, RngStream& rng) {
    validate_users(users);
    if (snrs.size() != users.size() || offsets.size() != users.size())
        throw std::invalid_argument("liu_select: size mismatch");
    std::vector<double> score(users.size());
    for (std::size_t i = 0; i < users.size(); ++i)
        score[i] = users[i].rate_fn.rate(snrs[i]) + offsets[i];
    return detail::argmax_random_tie(score, rng);
}

// Distribution-fairness rule: argmax_i F_i(snr_i) + d_i.
inline std::size_t df_select(const std::vector<UserSpec>& users,
                             const std::vector<double>& cdf_values,
                             const std::vector<double>& offsets, RngStream& rng) {
    validate_users(users);
    if (cdf_values.size() != users.size() || offsets.size() != users.size())
        throw std::invalid_argument("df_select: size mismatch");
    std::vector<double> score(users.size());
    for (std::size_t i = 0; i < users.size(); ++i)
        score[i] = cdf_values[i] + offsets[i];
    return detail::argmax_random_tie(score, rng);
}

// Single-user genie policy for bound validation: serve iff the SNR sits
// in the top alpha quantile.
inline bool optimal_threshold_select(const UserSpec& user, double target_car, double snr) {
    if (!(target_car > 0.0) || target_car > 1.0)
        throw std::invalid_argument("optimal_threshold_select: alpha must lie in (0, 1]");
    return user.channel.cdf(snr) >= 1.0 - target_car;
}

enum class OffsetPolicy { Liu, DF };

// Calibrated offsets plus convergence metadata.
struct OffsetVector {
    std::vector<double> offsets;
    std::uint64_t iterations = 0;  // simulated slots consumed
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// The stationary point of the per-slot update sits a step-proportional
// distance from the true offset (the CAR response is nonlinear, so iterate
// jitter shifts the mean). The 1/t decay drives that bias below tolerance;
// the half-life controls how many slots that takes.
struct CalibrationOptions {
    double tolerance = 0.005;         // accepted max |empirical CAR - target|
    std::uint64_t max_slots = 20'000'000;
    double step_scale = 0.0;          // 0 -> per-policy default
    double step_half_life = 200'000;  // slots until the step decays to half
    std::uint64_t block_slots = 500'000;        // SA slots per averaging block
    std::uint64_t validation_slots = 1'000'000; // frozen-offset check window
    std::uint64_t seed = 0x0ff5e7ca1UL;
};

// Stochastic-approximation calibration of Liu/DF offsets toward target
// CARs: per-slot update c_i += step_t * (target_i - selected_i) with a
// decaying step, Polyak-averaged per block, validated on a frozen window.
// User 0's offset is pinned to zero (selection depends only on offset
// differences). Non-convergence is reported through `converged`/`residual`,
// never silently accepted.
inline OffsetVector calibrate_offsets(const std::vector<UserSpec>& users,
                                      const std::vector<double>& targets,
                                      OffsetPolicy policy,
                                      const CalibrationOptions& options = {}) {
    validate_users(users);
    const std::size_t n = users.size();
    if (targets.size() != n) throw std::invalid_argument("calibrate_offsets: targets size mismatch");
    double sum = 0.0;
    for (double t : targets) {
        if (!(t > 0.0) || t > 1.0 || (t == 1.0 && n > 1))
            throw std::invalid_argument("calibrate_offsets: each target must lie in (0, 1)");
        sum += t;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("calibrate_offsets: targets must sum to 1");

    OffsetVector result;
    result.offsets.assign(n, 0.0);
    if (n == 1) {
        result.converged = true;
        result.residual = 0.0;
        return result;
    }

    const double a = options.step_scale > 0.0
                         ? options.step_scale
                         : (policy == OffsetPolicy::Liu ? 0.3 : 0.08);
    const double b = options.step_half_life;

    RngStream rng(options.seed);
    std::vector<double> snr(n), cdfv(n), working(n, 0.0), block_avg(n, 0.0);

    auto draw_slot = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            const ChannelDraw d = users[i].channel.draw(rng);
            snr[i] = d.snr;
            cdfv[i] = d.cdf_value;
        }
    };
    auto select_with = [&](const std::vector<double>& offs) {
        return policy == OffsetPolicy::Liu ? liu_select(users, snr, offs, rng)
                                           : df_select(users, cdfv, offs, rng);
    };
    auto validate = [&](const std::vector<double>& offs) {
        std::vector<std::uint64_t> counts(n, 0);
        for (std::uint64_t t = 0; t < options.validation_slots; ++t) {
            draw_slot();
            ++counts[select_with(offs)];
        }
        result.iterations += options.validation_slots;
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double car = static_cast<double>(counts[i]) / options.validation_slots;
            worst = std::max(worst, std::fabs(car - targets[i]));
        }
        return worst;
    };

    // Zero offsets may already satisfy the targets (symmetric scenarios).
    double residual = validate(result.offsets);
    if (residual < options.tolerance) {
        result.residual = residual;
        result.converged = true;
        return result;
    }

    std::uint64_t t_global = 0;
    while (result.iterations < options.max_slots) {
        std::fill(block_avg.begin(), block_avg.end(), 0.0);
        for (std::uint64_t t = 0; t < options.block_slots; ++t, ++t_global) {
            draw_slot();
            const std::size_t sel = select_with(working);
            const double step = a / (1.0 + static_cast<double>(t_global) / b);
            for (std::size_t i = 0; i < n; ++i)
                working[i] += step * (targets[i] - (i == sel ? 1.0 : 0.0));
            const double gauge = working[0];
            for (std::size_t i = 0; i < n; ++i) {
                working[i] -= gauge;
                block_avg[i] += working[i];
            }
        }
        result.iterations += options.block_slots;
        for (std::size_t i = 0; i < n; ++i)
            block_avg[i] /= static_cast<double>(options.block_slots);

        residual = validate(block_avg);
        if (residual < options.tolerance) {
            result.offsets = block_avg;
            result.residual = residual;
            result.converged = true;
            return result;
        }
    }

    result.offsets = block_avg;
    result.residual = residual;
    result.converged = false;
    return result;
}

}  // namespace csched
