#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csched/fading.hpp"
#include "csched/math/quadrature.hpp"
#include "csched/math/special.hpp"

namespace csched {

inline constexpr double log2_e = 1.4426950408889634073599246810019;

struct ThroughputQuery {
    ChannelModel channel = ChannelModel::rayleigh(1.0);
    RateFunction rate_fn = RateFunction::shannon();
    double alpha = 1.0;  // CAR, in (0, 1]
    double x = 0.0;      // lower CDF truncation, in [0, 1]
    double p = 0.0;      // NFB probability (CS-FR only)
};

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("alpha must lie in (0, 1]");
}

inline void check_x(double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("x must lie in [0, 1]");
}

// Quantile at u^alpha for u in (0, 1), evaluated from whichever side of
// the distribution is well conditioned. 1 - u^alpha is formed with expm1
// so the tail keeps full precision.
inline double quantile_pow(const ChannelModel& channel, double u, double alpha) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) u = 1.0 - 1e-16;
    const double q = -std::expm1(alpha * std::log(u));
    if (q < 0.5) return channel.inverse_sf(std::max(q, 1e-300));
    return channel.inverse_cdf(std::exp(alpha * std::log(u)));
}

inline double pow_1_over_alpha(double z, double alpha) {
    if (z <= 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    return std::exp(std::log(z) / alpha);
}

}  // namespace detail

// Universal throughput function S(x, alpha) = int_{F^{-1}(x)}^inf R dF^{1/alpha},
// computed in u-space after substituting u = F^{1/alpha}:
//   S = int_{x^{1/alpha}}^{1} R(F^{-1}(u^alpha)) du.
// The substitution turns the half-line integral into a bounded one. Capped
// and staircase rate functions are split at their knots: the constant
// pieces integrate exactly and only the curved part sees quadrature.
inline double s_universal(const ChannelModel& channel, const RateFunction& rate_fn,
                          double x, double alpha, double rel_tol = 1e-8) {
    detail::check_alpha(alpha);
    detail::check_x(x);
    if (!channel.continuous())
        throw std::invalid_argument("s_universal: channel must have a continuous CDF");
    if (x >= 1.0) return 0.0;

    const double lower = detail::pow_1_over_alpha(x, alpha);
    if (lower >= 1.0) return 0.0;

    if (rate_fn.kind() == RateKind::TableMCS) {
        // Exact staircase sum: S = sum_k r_k (z_{k+1}^{1/alpha} - z_k^{1/alpha}).
        const auto& steps = rate_fn.steps();
        double total = 0.0;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const double z_lo = std::max(channel.cdf(steps[k].first), x);
            const double z_hi =
                k + 1 < steps.size() ? std::max(channel.cdf(steps[k + 1].first), x) : 1.0;
            if (z_hi > z_lo)
                total += steps[k].second * (detail::pow_1_over_alpha(z_hi, alpha) -
                                            detail::pow_1_over_alpha(z_lo, alpha));
        }
        return total;
    }

    double upper = 1.0;
    double constant_tail = 0.0;
    if (rate_fn.kind() == RateKind::CappedShannon) {
        const double u_cap =
            detail::pow_1_over_alpha(channel.cdf(rate_fn.cap_snr()), alpha);
        if (u_cap <= lower) return rate_fn.cap_rate() * (1.0 - lower);
        upper = u_cap;
        constant_tail = rate_fn.cap_rate() * (1.0 - u_cap);
    }

    const auto integrand = [&](double u) {
        return rate_fn.rate(detail::quantile_pow(channel, u, alpha));
    };
    return math::integrate_or_throw(integrand, lower, upper, rel_tol) + constant_tail;
}

inline double s_universal(const ThroughputQuery& q, double rel_tol = 1e-8) {
    return s_universal(q.channel, q.rate_fn, q.x, q.alpha, rel_tol);
}

// Mean rate E[R] = S(0, 1).
inline double mean_rate(const ChannelModel& channel, const RateFunction& rate_fn,
                        double rel_tol = 1e-8) {
    return s_universal(channel, rate_fn, 0.0, 1.0, rel_tol);
}

// Lower partial throughput S_L(x, alpha) = S(0, alpha) - S(x, alpha).
inline double s_lower_part(const ChannelModel& channel, const RateFunction& rate_fn,
                           double x, double alpha, double rel_tol = 1e-8) {
    return s_universal(channel, rate_fn, 0.0, alpha, rel_tol) -
           s_universal(channel, rate_fn, x, alpha, rel_tol);
}

// Per-user CS throughput S_CS(alpha) = alpha * S(0, alpha).
inline double s_cs(const ChannelModel& channel, const RateFunction& rate_fn, double alpha,
                   double rel_tol = 1e-8) {
    return alpha * s_universal(channel, rate_fn, 0.0, alpha, rel_tol);
}

// Round-robin throughput S_RRS(alpha) = alpha * E[R].
inline double s_rrs(const ChannelModel& channel, const RateFunction& rate_fn, double alpha,
                    double rel_tol = 1e-8) {
    detail::check_alpha(alpha);
    return alpha * mean_rate(channel, rate_fn, rel_tol);
}

// Throughput upper bound for a CAR constraint: S_UB(alpha) = S(1 - alpha, 1).
inline double s_ub(const ChannelModel& channel, const RateFunction& rate_fn, double alpha,
                   double rel_tol = 1e-8) {
    detail::check_alpha(alpha);
    return s_universal(channel, rate_fn, 1.0 - alpha, 1.0, rel_tol);
}

// Closed-form CS throughput lower bound:
//   S_CS(alpha) >= alpha R(F^{-1}(1 + alpha ln alpha)) [1 - (1 + alpha ln alpha)^{1/alpha}].
// 1 + alpha ln alpha stays within [1 - 1/e, 1] for alpha in (0, 1].
inline double s_lb(const ChannelModel& channel, const RateFunction& rate_fn, double alpha) {
    detail::check_alpha(alpha);
    const double y = 1.0 + alpha * std::log(alpha);
    const double bracket = 1.0 - std::exp(std::log(y) / alpha);
    if (bracket <= 0.0) return 0.0;  // alpha = 1 collapses the bound to zero
    return alpha * rate_fn.rate(channel.inverse_cdf(y)) * bracket;
}

namespace detail {

// Coefficients of (sum_{l=0}^{m-1} y^l / l!)^k: c(0,k)=1, c(1,k)=k, top
// coefficient [(m-1)!]^{-k}, interior by the power recursion
//   c(j,k) = (1/j) sum_{l=1}^{min(j,m-1)} [l(k+1)-j]/l! * c(j-l,k).
inline std::vector<double> truncated_exp_power_coeffs(int m, int k) {
    const int top = k * (m - 1);
    std::vector<double> c(static_cast<std::size_t>(top) + 1, 0.0);
    c[0] = 1.0;
    double l_factorial = 1.0;
    std::vector<double> inv_lfact(static_cast<std::size_t>(m), 1.0);
    for (int l = 1; l < m; ++l) {
        l_factorial *= l;
        inv_lfact[static_cast<std::size_t>(l)] = 1.0 / l_factorial;
    }
    for (int j = 1; j <= top; ++j) {
        double acc = 0.0;
        const int l_max = std::min(j, m - 1);
        for (int l = 1; l <= l_max; ++l)
            acc += (static_cast<double>(l) * (k + 1) - j) * inv_lfact[static_cast<std::size_t>(l)] *
                   c[static_cast<std::size_t>(j - l)];
        c[static_cast<std::size_t>(j)] = acc / j;
    }
    return c;
}

// All T orders up to j_max, where
//   T_j(gamma_th, theta) = int_{gamma_th}^inf g^j e^{-g/theta} / (1+g) dg.
// The binomial expansion of g^j = ((1+g)-1)^j that Eq.-style derivations
// suggest cancels catastrophically once j theta is deep below 1 (terms grow
// to ~1e7 while the integral sits near 1e-18). Instead: split g^j =
// g^{j-1}(1+g) - g^{j-1}, which gives the first-order recurrence
//   T_j = G_{j-1} - T_{j-1},   G_n = theta^{n+1} Gamma(n+1, gamma_th/theta),
// whose intermediates never exceed max(G_n): errors pass through with
// modulus one and stay at the extended-precision noise floor.
inline std::vector<long double> t_terms(double gamma_th, int j_max, double theta) {
    const long double th = theta;
    const long double y = gamma_th / th;          // lower limit of the Gamma tails
    const long double z = (1.0L + gamma_th) / th; // E1 argument

    std::vector<long double> t(static_cast<std::size_t>(j_max) + 1);
    t[0] = expl(-y) * math::exp1_scaled_l(z);
    if (j_max == 0) return t;

    // G_n = theta^{n+1} n! * head_n with head_n = e^{-y} sum_{l<=n} y^l/l!,
    // a Poisson CDF (<= 1), so nothing here overflows prematurely.
    long double pois = expl(-y);
    long double head = pois;
    long double theta_pow = th;
    long double n_factorial = 1.0L;
    for (int j = 1; j <= j_max; ++j) {
        const long double g_prev = theta_pow * n_factorial * head;  // G_{j-1}
        t[static_cast<std::size_t>(j)] = g_prev - t[static_cast<std::size_t>(j) - 1];
        pois *= y / j;
        head += pois;
        theta_pow *= th;
        n_factorial *= j;
    }
    return t;
}

inline double t_term(double gamma_th, int j, double theta) {
    return static_cast<double>(t_terms(gamma_th, j, theta)[static_cast<std::size_t>(j)]);
}

}  // namespace detail

// Nakagami-m closed form for S(x, 1/K) under the Shannon rate (integer m,
// integer K):
//   S = log2(1+g_th) [1 - x^K]
//     + log2(e) sum_{k=1}^K sum_{j=0}^{k(m-1)} (-1)^{k+1} C(K,k) c(j,k) (m/mean)^j
//       T(g_th, j, mean/(k m)).
inline double s_nakagami_closed(const ChannelModel& channel, double x, int big_k) {
    if (channel.kind() != ChannelKind::NakagamiM)
        throw std::invalid_argument("s_nakagami_closed: NakagamiM channel required");
    if (big_k < 1) throw std::invalid_argument("s_nakagami_closed: K must be a positive integer");
    detail::check_x(x);
    if (x >= 1.0) return 0.0;

    const int m = channel.shape_m();
    const double mean = channel.mean_snr();
    const double gamma_th = x > 0.0 ? channel.inverse_cdf(x) : 0.0;
    const double ratio = m / mean;

    long double total =
        static_cast<long double>(std::log2(1.0 + gamma_th)) * (1.0L - std::pow(static_cast<long double>(x), big_k));

    for (int k = 1; k <= big_k; ++k) {
        const double theta = mean / (static_cast<double>(k) * m);
        const std::vector<double> coeff = detail::truncated_exp_power_coeffs(m, k);
        const std::vector<long double> t = detail::t_terms(gamma_th, k * (m - 1), theta);
        long double inner = 0.0L;
        long double ratio_pow = 1.0L;
        for (int j = 0; j <= k * (m - 1); ++j) {
            if (j > 0) ratio_pow *= ratio;
            inner += static_cast<long double>(coeff[static_cast<std::size_t>(j)]) * ratio_pow *
                     t[static_cast<std::size_t>(j)];
        }
        const long double sign = (k % 2 == 1) ? 1.0L : -1.0L;
        total += static_cast<long double>(log2_e) * sign *
                 static_cast<long double>(math::binomial(big_k, k)) * inner;
    }
    return static_cast<double>(total);
}

// Inverse-CDF tail expansion for Nakagami-m:
//   F^{-1}(1 - a) ~ (mean/m) [ln(1/a) + (m-1) ln ln(1/a)]
// (the O(ln ln ln) term is dropped). Needs a < 1/e so ln ln(1/a) exists.
inline double inv_cdf_asymptotic(int m, double mean_snr, double alpha) {
    if (m < 1 || !(mean_snr > 0.0))
        throw std::invalid_argument("inv_cdf_asymptotic: invalid channel parameters");
    if (!(alpha > 0.0) || alpha >= std::exp(-1.0))
        throw std::domain_error("inv_cdf_asymptotic: alpha must lie in (0, 1/e)");
    const double log_inv = std::log(1.0 / alpha);
    return mean_snr / m * (log_inv + (m - 1) * std::log(log_inv));
}

struct GainScale {
    double g_ub_asym = 0.0;     // R(F^{-1}(1-alpha)) / E[R]
    double g_lb_asym = 0.0;     // R(F^{-1}(1+alpha ln alpha)) / E[R]
    double remark_scale = 0.0;  // log2(e) ln ln(1/alpha) / E[R]; NaN if alpha >= 1/e
};

// Finite-alpha evaluations of the throughput-gain scaling laws.
inline GainScale gain_scale(const ChannelModel& channel, const RateFunction& rate_fn,
                            double alpha, double rel_tol = 1e-8) {
    detail::check_alpha(alpha);
    if (alpha >= 1.0) throw std::invalid_argument("gain_scale: alpha must be below 1");
    const double e_r = mean_rate(channel, rate_fn, rel_tol);
    GainScale g;
    g.g_ub_asym = rate_fn.rate(channel.inverse_sf(alpha)) / e_r;
    g.g_lb_asym = rate_fn.rate(channel.inverse_cdf(1.0 + alpha * std::log(alpha))) / e_r;
    g.remark_scale = alpha < std::exp(-1.0)
                         ? log2_e * std::log(std::log(1.0 / alpha)) / e_r
                         : std::numeric_limits<double>::quiet_NaN();
    return g;
}

// CS-FR throughput S_CS-FR(alpha, p) = alpha S(p^alpha, alpha)
//                                     + alpha p^{1-alpha} S_L(p^alpha, 1).
inline double s_csfr(const ChannelModel& channel, const RateFunction& rate_fn, double alpha,
                     double p, double rel_tol = 1e-8) {
    detail::check_alpha(alpha);
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("s_csfr: p must lie in [0, 1]");
    if (p == 0.0) return s_cs(channel, rate_fn, alpha, rel_tol);
    const double p_alpha = std::pow(p, alpha);
    const double head = s_universal(channel, rate_fn, p_alpha, alpha, rel_tol);
    const double low = s_lower_part(channel, rate_fn, p_alpha, 1.0, rel_tol);
    return alpha * head + alpha * std::pow(p, 1.0 - alpha) * low;
}

struct CsfrBoundsVerdict {
    double lower_loose = 0.0;  // 1 - p
    double lower_tight = 0.0;  // 1 - p + alpha p^{2-alpha}
    double ratio = 0.0;        // S_CS-FR / S_CS
    bool holds = false;
};

// Sandwich 1-p <= 1-p+alpha p^{2-alpha} <= S_CS-FR/S_CS <= 1, checked with
// `slack` absolute play.
inline CsfrBoundsVerdict csfr_bounds(double alpha, double p, double s_cs_value,
                                     double s_csfr_value, double slack = 1e-9) {
    detail::check_alpha(alpha);
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("csfr_bounds: p must lie in [0, 1]");
    CsfrBoundsVerdict v;
    v.lower_loose = 1.0 - p;
    v.lower_tight = 1.0 - p + alpha * std::pow(p, 2.0 - alpha);
    v.ratio = s_csfr_value / s_cs_value;
    v.holds = v.lower_loose <= v.lower_tight + slack && v.lower_tight <= v.ratio + slack &&
              v.ratio <= 1.0 + slack;
    return v;
}

struct FeedbackOverhead {
    double mu = 0.0;              // sum_i (1 - p^{alpha_i})
    double mu_equal_bound = 0.0;  // n (1 - p^{1/n})
    double ln_bound = 0.0;        // -ln p
};

// Average per-slot feedback overhead and its two upper bounds. The chain
// mu <= n(1 - p^{1/n}) <= -ln p holds mathematically; violating it beyond
// floating-point play means corrupted inputs.
inline FeedbackOverhead feedback_overhead(const std::vector<double>& weights, double p) {
    if (weights.empty()) throw std::invalid_argument("feedback_overhead: no weights");
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("feedback_overhead: p must lie in (0, 1)");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("feedback_overhead: weights must be positive");
        total += w;
    }
    const double n = static_cast<double>(weights.size());
    FeedbackOverhead result;
    for (double w : weights) result.mu += 1.0 - std::pow(p, w / total);
    result.mu_equal_bound = n * (1.0 - std::pow(p, 1.0 / n));
    result.ln_bound = -std::log(p);
    if (result.mu > result.mu_equal_bound * (1.0 + 1e-12) + 1e-12 ||
        result.mu_equal_bound > result.ln_bound * (1.0 + 1e-12) + 1e-12)
        throw std::logic_error("feedback_overhead: bound chain violated");
    return result;
}

// Selected-SNR CDF under CS-FR:
//   p^{1-alpha} F(snr)   below F^{-1}(p^alpha),
//   F(snr)^{1/alpha}     at and above it.
// The branch test compares F(snr) with p^alpha directly, which is the same
// boundary without an inversion. p = 0 degenerates to F^{1/alpha}.
inline double csfr_selected_cdf(const ChannelModel& channel, double alpha, double p,
                                double snr) {
    detail::check_alpha(alpha);
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("csfr_selected_cdf: p outside [0, 1]");
    const double f = channel.cdf(snr);
    if (p == 0.0) return detail::pow_1_over_alpha(f, alpha);
    const double p_alpha = std::pow(p, alpha);
    if (f < p_alpha) return std::pow(p, 1.0 - alpha) * f;
    return detail::pow_1_over_alpha(f, alpha);
}

// Slot-type conditionals: the selected-SNR law restricted to NFB slots
// (round-robin fill-in, SNR conditioned below the threshold quantile) and
// to FB slots.
inline double csfr_selected_cdf_nfb(const ChannelModel& channel, double alpha, double p,
                                    double snr) {
    detail::check_alpha(alpha);
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("csfr_selected_cdf_nfb: p must lie in (0, 1]");
    const double f = channel.cdf(snr);
    return std::min(std::pow(p, -alpha) * f, 1.0);
}

inline double csfr_selected_cdf_fb(const ChannelModel& channel, double alpha, double p,
                                   double snr) {
    detail::check_alpha(alpha);
    if (!(p >= 0.0) || !(p < 1.0))
        throw std::invalid_argument("csfr_selected_cdf_fb: p must lie in [0, 1)");
    const double f = channel.cdf(snr);
    const double p_alpha = p > 0.0 ? std::pow(p, alpha) : 0.0;
    if (f < p_alpha) return 0.0;
    return (detail::pow_1_over_alpha(f, alpha) - p) / (1.0 - p);
}

struct GainReport {
    double s_cs = 0.0;
    double s_rrs = 0.0;
    double s_ub = 0.0;
    double s_lb = 0.0;
    double s_csfr = 0.0;
    double g_cs = 0.0;
    double g_ub = 0.0;
    double e_r = 0.0;
};

// All throughput quantities for one (channel, rate, alpha, p) query.
inline GainReport gain_report(const ThroughputQuery& q, double rel_tol = 1e-8) {
    GainReport r;
    r.e_r = mean_rate(q.channel, q.rate_fn, rel_tol);
    r.s_cs = s_cs(q.channel, q.rate_fn, q.alpha, rel_tol);
    r.s_rrs = q.alpha * r.e_r;
    r.s_ub = s_ub(q.channel, q.rate_fn, q.alpha, rel_tol);
    r.s_lb = s_lb(q.channel, q.rate_fn, q.alpha);
    r.s_csfr = s_csfr(q.channel, q.rate_fn, q.alpha, q.p, rel_tol);
    r.g_cs = r.s_cs / r.s_rrs;
    r.g_ub = r.s_ub / r.s_rrs;
    return r;
}

}  // namespace csched
