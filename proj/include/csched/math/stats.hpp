#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace csched::math {

// One-sample Kolmogorov-Smirnov statistic: sup |F_n - F| over the sample.
// `reference` is a callable CDF. The sample is copied and sorted.
template <class Cdf>
double ks_distance(std::vector<double> sample, const Cdf& reference) {
    if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = reference(sample[i]);
        d = std::max(d, std::fabs((i + 1.0) / n - f));
        d = std::max(d, std::fabs(static_cast<double>(i) / n - f));
    }
    return d;
}

// Asymptotic one-sample KS critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) {
    return 1.63 / std::sqrt(static_cast<double>(n));
}

// Two-sample KS statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] <= b[ib])
            ++ia;
        else
            ++ib;
        d = std::max(d, std::fabs(ia / na - ib / nb));
    }
    return d;
}

// Two-sample KS critical value at the 1% level.
inline double ks_two_sample_critical_1pct(std::size_t n, std::size_t m) {
    return 1.628 * std::sqrt((static_cast<double>(n) + m) /
                             (static_cast<double>(n) * m));
}

// Streaming mean / variance accumulator (mergeable across replicas).
class RunningStats {
  public:
    void add(double x) {
        ++count_;
        sum_ += x;
        sum_sq_ += x * x;
    }
    void merge(const RunningStats& other) {
        count_ += other.count_;
        sum_ += other.sum_;
        sum_sq_ += other.sum_sq_;
    }
    std::uint64_t count() const { return count_; }
    double mean() const { return count_ ? sum_ / count_ : 0.0; }
    double variance() const {
        if (count_ < 2) return 0.0;
        const double m = mean();
        return std::max(0.0, (sum_sq_ - count_ * m * m) / (count_ - 1.0));
    }
    double stderr_of_mean() const {
        return count_ ? std::sqrt(variance() / count_) : 0.0;
    }

  private:
    std::uint64_t count_ = 0;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
};

}  // namespace csched::math
