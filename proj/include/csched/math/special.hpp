#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace csched::math {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240;

// Exponential integral E1(z) = \int_z^inf e^{-t}/t dt, z > 0.
// Power series below 1, modified Lentz continued fraction above; the
// crossover keeps both branches near machine precision (~1e-15 relative).
inline double exp1(double z) {
    if (!(z > 0.0)) throw std::domain_error("exp1: argument must be positive");
    if (z < 1.0) {
        // E1(z) = -gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)
        double sum = 0.0;
        double term = 1.0;
        for (int k = 1; k <= 60; ++k) {
            term *= -z / k;
            const double add = -term / k;
            sum += add;
            if (std::fabs(add) < 1e-17 * std::fabs(sum) + 1e-300) break;
        }
        return -euler_gamma - std::log(z) + sum;
    }
    // Lentz continued fraction: E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...)))
    const double tiny = 1e-300;
    double b = z + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 200; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = a * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + a / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-z);
}

// e^z * E1(z) in extended precision; callers that difference long chains of
// incomplete-gamma tails against it need the extra digits. The continued
// fraction computes the scaled form natively, so it stays finite where E1
// itself would underflow.
inline long double exp1_scaled_l(long double z) {
    if (!(z > 0.0L)) throw std::domain_error("exp1_scaled_l: argument must be positive");
    if (z < 1.0L) {
        // E1(z) = -gamma - ln z + sum (-1)^{k+1} z^k / (k k!)
        long double sum = 0.0L;
        long double term = 1.0L;
        for (int k = 1; k <= 80; ++k) {
            term *= -z / k;
            const long double add = -term / k;
            sum += add;
            if (fabsl(add) < 1e-21L * fabsl(sum) + 1e-320L) break;
        }
        return expl(z) * (-static_cast<long double>(euler_gamma) - logl(z) + sum);
    }
    const long double tiny = 1e-320L;
    long double b = z + 1.0L;
    long double c = 1.0L / tiny;
    long double d = 1.0L / b;
    long double h = d;
    for (int i = 1; i <= 300; ++i) {
        const long double a = -static_cast<long double>(i) * i;
        b += 2.0L;
        d = a * d + b;
        if (fabsl(d) < tiny) d = tiny;
        c = b + a / c;
        if (fabsl(c) < tiny) c = tiny;
        d = 1.0L / d;
        const long double delta = d * c;
        h *= delta;
        if (fabsl(delta - 1.0L) < 1e-19L) break;
    }
    return h;
}

// e^z * E1(z) in double precision.
inline double exp1_scaled(double z) {
    return static_cast<double>(exp1_scaled_l(static_cast<long double>(z)));
}

// Regularized upper incomplete gamma Q(m, x) = e^{-x} sum_{j<m} x^j/j!
// for integer shape m >= 1. Log-domain fallback once x^j overflows.
inline double gamma_q_int(int m, double x) {
    if (m < 1) throw std::domain_error("gamma_q_int: shape must be a positive integer");
    if (x < 0.0) throw std::domain_error("gamma_q_int: negative argument");
    if (x == 0.0) return 1.0;
    double sum = 1.0;
    double term = 1.0;
    for (int j = 1; j < m; ++j) {
        term *= x / j;
        sum += term;
    }
    if (std::isfinite(sum)) return std::exp(-x) * sum;
    double log_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
        log_max = std::max(log_max, j * std::log(x) - std::lgamma(j + 1.0));
    double scaled = 0.0;
    for (int j = 0; j < m; ++j)
        scaled += std::exp(j * std::log(x) - std::lgamma(j + 1.0) - log_max);
    return std::exp(log_max - x) * scaled;
}

// Regularized lower incomplete gamma P(m, x) for integer shape m >= 1.
// Series when x < m + 1, complement of the finite Poisson tail otherwise;
// the split keeps relative accuracy at both ends (the naive 1 - sum form
// cancels catastrophically for x << m).
inline double gamma_p_int(int m, double x) {
    if (m < 1) throw std::domain_error("gamma_p_int: shape must be a positive integer");
    if (x < 0.0) throw std::domain_error("gamma_p_int: negative argument");
    if (x == 0.0) return 0.0;
    if (x < m + 1.0) {
        // P(m,x) = x^m e^{-x} / m! * sum_{k>=0} x^k / ((m+1)...(m+k))
        double term = 1.0;
        double sum = 1.0;
        double denom = static_cast<double>(m);
        for (int k = 1; k <= 500; ++k) {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        const double log_front = m * std::log(x) - x - std::lgamma(m + 1.0);
        return std::exp(log_front) * sum;
    }
    return 1.0 - gamma_q_int(m, x);
}

// Binomial coefficient with a log-domain fallback once the running
// product would overflow.
inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double result = 1.0;
    for (int i = 1; i <= k; ++i) {
        result *= static_cast<double>(n - k + i) / i;
        if (!std::isfinite(result))
            return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                            std::lgamma(n - k + 1.0));
    }
    return result;
}

}  // namespace csched::math
