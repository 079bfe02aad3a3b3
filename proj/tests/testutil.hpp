#pragma once

// Shared helpers for the test binaries.  fd_gradient is a deliberately
// independent central-difference probe (no reuse of selfmi::grad_check) so the
// library's analytic gradients and its own checker can vouch for each other.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace testutil {

inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(x);
        x[i] = saved - h;
        const double fm = f(x);
        x[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double max_rel_err(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace testutil
