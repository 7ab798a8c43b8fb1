#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csched/math/stats.hpp"

namespace csched {

// Upper bound of the average selected-CDF value for a CAR of alpha,
// achieved by the top-quantile genie: D_UB(alpha) = (2 - alpha) / 2.
inline double d_ub(double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("d_ub: alpha outside (0, 1]");
    return 0.5 * (2.0 - alpha);
}

// CS average selected-CDF value D(alpha) = 1 / (1 + alpha).
inline double d_cs(double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("d_cs: alpha outside (0, 1]");
    return 1.0 / (1.0 + alpha);
}

// Degree of achieved multi-user diversity under CS:
//   I_D(alpha) = 2 / ((1 + alpha)(2 - alpha)) >= 8/9,
// with the minimum at alpha = 1/2.
inline double i_d_cs(double alpha) {
    return d_cs(alpha) / d_ub(alpha);
}

struct EmpiricalD {
    double d_value = 0.0;
    double standard_error = 0.0;
    std::uint64_t selections = 0;
};

// Average CDF value of a user conditioned on selection, estimated from the
// recorded selected-slot CDF values (not re-derived from SNR).
inline EmpiricalD empirical_d(const math::RunningStats& selected_cdf_stats,
                              std::uint64_t min_selections = 1000) {
    if (selected_cdf_stats.count() < min_selections)
        throw std::invalid_argument("empirical_d: too few selections for a stable estimate");
    EmpiricalD d;
    d.d_value = selected_cdf_stats.mean();
    d.standard_error = selected_cdf_stats.stderr_of_mean();
    d.selections = selected_cdf_stats.count();
    return d;
}

struct FairnessReport {
    std::vector<double> d_value;          // per-user D estimate
    std::vector<double> d_ub;             // per-user D_UB(alpha_i)
    std::vector<double> i_d;              // per-user D / D_UB
    std::vector<double> estimator_stderr; // stderr of the D estimate
    double qfi = 0.0;                     // min_i I_D,i
};

// Scheduler-level qualitative fairness index: the worst per-user I_D.
inline double qfi(const std::vector<double>& i_d_values) {
    if (i_d_values.empty()) throw std::invalid_argument("qfi: no users");
    double worst = std::numeric_limits<double>::infinity();
    for (double v : i_d_values) worst = std::min(worst, v);
    return worst;
}

// Assemble the per-user fairness report from selected-slot CDF statistics
// and the users' CARs.
inline FairnessReport fairness_report(const std::vector<math::RunningStats>& selected_cdf,
                                      const std::vector<double>& alphas,
                                      std::uint64_t min_selections = 1000) {
    if (selected_cdf.size() != alphas.size())
        throw std::invalid_argument("fairness_report: size mismatch");
    FairnessReport report;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const EmpiricalD d = empirical_d(selected_cdf[i], min_selections);
        const double ub = d_ub(alphas[i]);
        report.d_value.push_back(d.d_value);
        report.d_ub.push_back(ub);
        report.i_d.push_back(d.d_value / ub);
        report.estimator_stderr.push_back(d.standard_error);
    }
    report.qfi = qfi(report.i_d);
    return report;
}

}  // namespace csched
