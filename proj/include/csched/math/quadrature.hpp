#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace csched::math {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// Gauss 7 / Kronrod 15 node-weight table: {abscissa, gauss weight, kronrod weight}.
inline constexpr double gk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0,               0.204432940075298},
    {0.586087235467691, 0.0,               0.169004726639267},
    {0.864864423359769, 0.0,               0.104790010322250},
    {0.991455371120813, 0.0,               0.022935322010529},
};

template <class F>
void gk15_panel(const F& f, double a, double b, double& value, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double g7 = gk15[0][1] * f0;
    double k15 = gk15[0][2] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * gk15[i][0];
        const double fs = f(mid + dx) + f(mid - dx);
        g7 += gk15[i][1] * fs;
        k15 += gk15[i][2] * fs;
    }
    g7 *= half;
    k15 *= half;
    value = k15;
    const double diff = 200.0 * std::fabs(k15 - g7);
    err = diff * std::sqrt(diff);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over the finite interval [a, b].
// Bisects the interval with the worst error estimate until the summed
// estimate meets rel_tol * |integral| or abs_tol.
template <class F>
QuadratureResult integrate_adaptive(const F& f, double a, double b,
                                    double rel_tol = 1e-8, double abs_tol = 1e-14,
                                    int max_intervals = 4000) {
    QuadratureResult result;
    if (a == b) {
        result.converged = true;
        return result;
    }

    struct Interval {
        double a, b, value, err;
    };
    std::vector<Interval> heap;
    heap.reserve(64);

    double v, e;
    detail::gk15_panel(f, a, b, v, e);
    heap.push_back({a, b, v, e});

    double total = v;
    double total_err = e;
    while (total_err > rel_tol * std::fabs(total) && total_err > abs_tol) {
        if (static_cast<int>(heap.size()) >= max_intervals) break;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < heap.size(); ++i)
            if (heap[i].err > heap[worst].err) worst = i;

        const Interval iv = heap[worst];
        const double mid = 0.5 * (iv.a + iv.b);
        Interval left{iv.a, mid, 0.0, 0.0};
        Interval right{mid, iv.b, 0.0, 0.0};
        detail::gk15_panel(f, left.a, left.b, left.value, left.err);
        detail::gk15_panel(f, right.a, right.b, right.value, right.err);

        total += left.value + right.value - iv.value;
        total_err += left.err + right.err - iv.err;
        heap[worst] = left;
        heap.push_back(right);
    }

    result.value = total;
    result.error_estimate = total_err;
    result.intervals = static_cast<int>(heap.size());
    result.converged =
        total_err <= rel_tol * std::fabs(total) || total_err <= abs_tol;
    return result;
}

// Throwing wrapper for integrals that are expected to converge.
template <class F>
double integrate_or_throw(const F& f, double a, double b, double rel_tol = 1e-8,
                          double abs_tol = 1e-14, int max_intervals = 4000) {
    const QuadratureResult r = integrate_adaptive(f, a, b, rel_tol, abs_tol, max_intervals);
    if (!r.converged)
        throw std::runtime_error("integrate_or_throw: quadrature failed to converge");
    return r.value;
}

}  // namespace csched::math
