#pragma once

// Central finite differences, kept independent of the analytic backward code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace censoring::testing {

inline std::vector<double> central_differences(std::span<double> values, const std::function<double()>& loss,
                                               double h = 1e-5) {
    std::vector<double> grad(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + h;
        const double up = loss();
        values[i] = saved - h;
        const double down = loss();
        values[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Largest entrywise |a - n| / max(|a|, |n|, floor). The floor keeps exactly-zero and
/// roundoff-sized entries from dominating.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                                 double floor = 1e-4) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace censoring::testing
