#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csched/math/special.hpp"
#include "csched/rng.hpp"

namespace csched {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

enum class ChannelKind { NakagamiM, Constant, Empirical };

// One per-slot observation: the SNR draw and its CDF value. For channels
// with a continuous CDF, `cdf_value` = cdf(snr). A Constant channel has a
// degenerate CDF; its value is an independent Uniform[0,1] draw spanning
// the jump, which keeps the uniform-feedback law and the CAR guarantees
// intact for schedulers operating on CDF values.
struct ChannelDraw {
    double snr = 0.0;
    double cdf_value = 0.0;
};

// Stationary SNR distribution: exact CDF, survival, inverse CDF, density,
// and sampling. Immutable after construction; safe to share across threads.
class ChannelModel {
  public:
    static ChannelModel nakagami(int m, double mean_snr) {
        if (m < 1) throw std::invalid_argument("ChannelModel: shape m must be a positive integer");
        if (!(mean_snr > 0.0)) throw std::invalid_argument("ChannelModel: mean SNR must be positive");
        ChannelModel c;
        c.kind_ = ChannelKind::NakagamiM;
        c.m_ = m;
        c.mean_snr_ = mean_snr;
        return c;
    }

    static ChannelModel nakagami_db(int m, double mean_snr_db) {
        return nakagami(m, db_to_linear(mean_snr_db));
    }

    static ChannelModel rayleigh(double mean_snr) { return nakagami(1, mean_snr); }

    static ChannelModel constant(double snr) {
        if (!(snr > 0.0)) throw std::invalid_argument("ChannelModel: constant SNR must be positive");
        ChannelModel c;
        c.kind_ = ChannelKind::Constant;
        c.constant_snr_ = snr;
        c.mean_snr_ = snr;
        return c;
    }

    // Piecewise-linear CDF through sorted (snr, cdf) knots. The table must
    // start at cdf 0 and end at cdf 1.
    static ChannelModel empirical(std::vector<std::pair<double, double>> table) {
        if (table.size() < 2) throw std::invalid_argument("ChannelModel: empirical table needs >= 2 knots");
        for (std::size_t i = 1; i < table.size(); ++i) {
            if (table[i].first <= table[i - 1].first || table[i].second < table[i - 1].second)
                throw std::invalid_argument("ChannelModel: empirical table must be sorted and nondecreasing");
        }
        if (table.front().second != 0.0 || table.back().second != 1.0)
            throw std::invalid_argument("ChannelModel: empirical table must span cdf [0, 1]");
        if (table.front().first < 0.0)
            throw std::invalid_argument("ChannelModel: empirical SNR must be nonnegative");
        ChannelModel c;
        c.kind_ = ChannelKind::Empirical;
        c.table_ = std::move(table);
        double mean = 0.0;
        for (std::size_t i = 1; i < c.table_.size(); ++i) {
            const auto& [s0, u0] = c.table_[i - 1];
            const auto& [s1, u1] = c.table_[i];
            mean += 0.5 * (s0 + s1) * (u1 - u0);
        }
        c.mean_snr_ = mean;
        return c;
    }

    ChannelKind kind() const { return kind_; }
    int shape_m() const { return m_; }
    double mean_snr() const { return mean_snr_; }
    double constant_snr() const { return constant_snr_; }
    bool continuous() const { return kind_ != ChannelKind::Constant; }

    // F(snr). For Nakagami-m with integer m this is the regularized lower
    // incomplete gamma P(m, m*snr/mean).
    double cdf(double snr) const {
        if (snr < 0.0) throw std::domain_error("cdf: negative SNR");
        switch (kind_) {
            case ChannelKind::NakagamiM:
                return math::gamma_p_int(m_, m_ * snr / mean_snr_);
            case ChannelKind::Constant:
                return snr >= constant_snr_ ? 1.0 : 0.0;
            case ChannelKind::Empirical:
                return empirical_cdf(snr);
        }
        return 0.0;
    }

    // Survival function 1 - F(snr), computed without cancellation so the
    // deep tail keeps full relative precision.
    double sf(double snr) const {
        if (snr < 0.0) throw std::domain_error("sf: negative SNR");
        switch (kind_) {
            case ChannelKind::NakagamiM:
                return math::gamma_q_int(m_, m_ * snr / mean_snr_);
            case ChannelKind::Constant:
                return snr >= constant_snr_ ? 0.0 : 1.0;
            case ChannelKind::Empirical:
                return 1.0 - empirical_cdf(snr);
        }
        return 0.0;
    }

    // Density f(snr); used by the safeguarded Newton inversion.
    double pdf(double snr) const {
        if (snr < 0.0) throw std::domain_error("pdf: negative SNR");
        if (kind_ != ChannelKind::NakagamiM)
            throw std::domain_error("pdf: only defined for NakagamiM channels");
        const double c = m_ / mean_snr_;
        const double x = c * snr;
        if (x == 0.0) return m_ == 1 ? c : 0.0;
        // f = c * x^{m-1} e^{-x} / (m-1)!
        return c * std::exp((m_ - 1) * std::log(x) - x - std::lgamma(static_cast<double>(m_)));
    }

    // Quantile F^{-1}(u) for u in [0, 1). u = 1 is rejected for channels
    // with unbounded support (no finite preimage).
    double inverse_cdf(double u) const {
        if (u < 0.0 || u > 1.0) throw std::domain_error("inverse_cdf: u outside [0, 1]");
        switch (kind_) {
            case ChannelKind::NakagamiM:
                if (u == 1.0) throw std::domain_error("inverse_cdf: u = 1 has no finite preimage");
                if (u == 0.0) return 0.0;
                return invert_nakagami(u, 1.0 - u);
            case ChannelKind::Constant:
                return u == 0.0 ? 0.0 : constant_snr_;
            case ChannelKind::Empirical:
                return empirical_quantile(u);
        }
        return 0.0;
    }

    // Tail quantile: snr with sf(snr) = q. Well conditioned where
    // inverse_cdf is not (q near 0), and vice versa.
    double inverse_sf(double q) const {
        if (q < 0.0 || q > 1.0) throw std::domain_error("inverse_sf: q outside [0, 1]");
        switch (kind_) {
            case ChannelKind::NakagamiM:
                if (q == 0.0) throw std::domain_error("inverse_sf: q = 0 has no finite preimage");
                if (q == 1.0) return 0.0;
                return invert_nakagami(1.0 - q, q);
            case ChannelKind::Constant:
                return q == 1.0 ? 0.0 : constant_snr_;
            case ChannelKind::Empirical:
                return empirical_quantile(1.0 - q);
        }
        return 0.0;
    }

    // One SNR draw. Nakagami-m (integer m) samples the Gamma(m, mean/m)
    // law as a sum of m exponentials folded into a single log.
    double sample(RngStream& rng) const {
        switch (kind_) {
            case ChannelKind::NakagamiM: {
                double prod = 1.0;
                for (int j = 0; j < m_; ++j) prod *= rng.uniform_pos();
                return -(mean_snr_ / m_) * std::log(prod);
            }
            case ChannelKind::Constant:
                return constant_snr_;
            case ChannelKind::Empirical:
                return empirical_quantile(rng.uniform01());
        }
        return 0.0;
    }

    // Joint (snr, cdf value) draw for one slot.
    ChannelDraw draw(RngStream& rng) const {
        switch (kind_) {
            case ChannelKind::NakagamiM: {
                const double snr = sample(rng);
                return {snr, cdf(snr)};
            }
            case ChannelKind::Constant:
                return {constant_snr_, rng.uniform01()};
            case ChannelKind::Empirical: {
                const double u = rng.uniform01();
                return {empirical_quantile(u), u};
            }
        }
        return {};
    }

    // CDF value stream U = F(sample); uniform on [0, 1] for continuous
    // channels. Rejected for Constant channels, whose CDF value is
    // degenerate (callers that can handle the convention use draw()).
    double cdf_value(RngStream& rng) const {
        if (!continuous())
            throw std::domain_error("cdf_value: degenerate CDF for a Constant channel");
        return draw(rng).cdf_value;
    }

  private:
    double empirical_cdf(double snr) const {
        if (snr <= table_.front().first) return snr == table_.front().first ? table_.front().second : 0.0;
        if (snr >= table_.back().first) return 1.0;
        auto it = std::upper_bound(table_.begin(), table_.end(), snr,
                                   [](double v, const auto& knot) { return v < knot.first; });
        const auto& [s1, u1] = *it;
        const auto& [s0, u0] = *(it - 1);
        return u0 + (u1 - u0) * (snr - s0) / (s1 - s0);
    }

    double empirical_quantile(double u) const {
        if (u <= 0.0) return table_.front().first;
        if (u >= 1.0) return table_.back().first;
        auto it = std::upper_bound(table_.begin(), table_.end(), u,
                                   [](double v, const auto& knot) { return v < knot.second; });
        if (it == table_.end()) return table_.back().first;
        const auto& [s1, u1] = *it;
        const auto& [s0, u0] = *(it - 1);
        if (u1 == u0) return s0;
        return s0 + (s1 - s0) * (u - u0) / (u1 - u0);
    }

    // Bracketed, safeguarded Newton for the Nakagami quantile. Works on
    // x = m*snr/mean. Uses whichever of (u, q) is better conditioned:
    // residual P(x) - u in the body, Q(x) - q in the tail.
    double invert_nakagami(double u, double q) const {
        const bool tail = q < 0.5;
        if (m_ == 1) {
            // Exponential quantile in closed form, from whichever side is exact.
            const double x = tail ? -std::log(q) : -std::log1p(-u);
            return x * mean_snr_;
        }
        // Initial guess. Left edge: P ~ x^m / m!; tail: x ~ -ln q + (m-1) ln x.
        double x;
        if (!tail) {
            x = std::exp((std::log(u) + std::lgamma(m_ + 1.0)) / m_);
            if (!(x > 0.0) || !std::isfinite(x)) x = static_cast<double>(m_);
        } else {
            x = -std::log(q);
            for (int it = 0; it < 4 && m_ > 1; ++it)
                x = -std::log(q) + (m_ - 1) * std::log(std::max(x, 1.0)) -
                    std::lgamma(static_cast<double>(m_));
            x = std::max(x, 0.5 * m_);
        }

        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        auto residual = [&](double xx) {
            return tail ? q - math::gamma_q_int(m_, xx) : math::gamma_p_int(m_, xx) - u;
        };
        // Grow a finite upper bracket.
        double hi_probe = std::max(x, 1.0);
        for (int it = 0; it < 200; ++it) {
            if (residual(hi_probe) >= 0.0) {
                hi = hi_probe;
                break;
            }
            lo = hi_probe;
            hi_probe *= 2.0;
        }
        if (!std::isfinite(hi))
            throw std::runtime_error("inverse_cdf: failed to bracket quantile");

        x = std::clamp(x, lo, hi);
        if (x == lo || x == hi) x = 0.5 * (lo + hi);
        const double scale = tail ? std::max(q, 1e-300) : std::max(u, 1e-300);
        for (int it = 0; it < 200; ++it) {
            const double r = residual(x);
            if (r >= 0.0)
                hi = std::min(hi, x);
            else
                lo = std::max(lo, x);
            if (std::fabs(r) <= 2e-16 * scale) break;
            const double deriv = pdf_x(x);
            double next = deriv > 0.0 ? x - r / deriv : 0.5 * (lo + hi);
            if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
            if (next == x) break;
            x = next;
            if (hi - lo <= 1e-15 * hi) break;
        }
        return x * mean_snr_ / m_;
    }

    // Density of the standardized variable x = m*snr/mean.
    double pdf_x(double x) const {
        if (x <= 0.0) return m_ == 1 ? 1.0 : 0.0;
        return std::exp((m_ - 1) * std::log(x) - x - std::lgamma(static_cast<double>(m_)));
    }

    ChannelKind kind_ = ChannelKind::NakagamiM;
    int m_ = 1;
    double mean_snr_ = 1.0;
    double constant_snr_ = 1.0;
    std::vector<std::pair<double, double>> table_;
};

enum class RateKind { ShannonLog2, CappedShannon, TableMCS };

// Nondecreasing mapping from instantaneous SNR to data rate (bits/slot).
class RateFunction {
  public:
    static RateFunction shannon() {
        RateFunction r;
        r.kind_ = RateKind::ShannonLog2;
        return r;
    }

    // min(log2(1 + snr), cap_rate); saturates above cap_snr = 2^cap - 1.
    static RateFunction capped_shannon(double cap_rate) {
        if (!(cap_rate > 0.0)) throw std::invalid_argument("RateFunction: cap must be positive");
        RateFunction r;
        r.kind_ = RateKind::CappedShannon;
        r.cap_rate_ = cap_rate;
        r.cap_snr_ = std::exp2(cap_rate) - 1.0;
        return r;
    }

    // Staircase of (snr_threshold, rate) steps; rate 0 below the first
    // threshold.
    static RateFunction table_mcs(std::vector<std::pair<double, double>> steps) {
        if (steps.empty()) throw std::invalid_argument("RateFunction: empty MCS table");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (steps[i].second < 0.0)
                throw std::invalid_argument("RateFunction: negative rate");
            if (i > 0 && (steps[i].first <= steps[i - 1].first ||
                          steps[i].second < steps[i - 1].second))
                throw std::invalid_argument("RateFunction: MCS table must be sorted and nondecreasing");
        }
        RateFunction r;
        r.kind_ = RateKind::TableMCS;
        r.steps_ = std::move(steps);
        return r;
    }

    RateKind kind() const { return kind_; }
    double cap_rate() const { return cap_rate_; }
    double cap_snr() const { return cap_snr_; }
    const std::vector<std::pair<double, double>>& steps() const { return steps_; }
    bool bounded() const { return kind_ != RateKind::ShannonLog2; }

    double operator()(double snr) const { return rate(snr); }

    double rate(double snr) const {
        if (snr < 0.0) throw std::domain_error("rate: negative SNR");
        switch (kind_) {
            case RateKind::ShannonLog2:
                return std::log2(1.0 + snr);
            case RateKind::CappedShannon:
                return std::min(std::log2(1.0 + snr), cap_rate_);
            case RateKind::TableMCS: {
                double r = 0.0;
                for (const auto& [thr, rr] : steps_) {
                    if (snr >= thr)
                        r = rr;
                    else
                        break;
                }
                return r;
            }
        }
        return 0.0;
    }

  private:
    RateKind kind_ = RateKind::ShannonLog2;
    double cap_rate_ = 0.0;
    double cap_snr_ = 0.0;
    std::vector<std::pair<double, double>> steps_;
};

}  // namespace csched
