#pragma once

#include <span>
#include <string_view>

namespace censoring::stats {

enum class Tier { none, p05, p01, p001 };

/// "−", "*", "†", "‡".
std::string_view symbol(Tier tier);

struct PairedTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  ///< two-sided
    Tier tier = Tier::none;
};

/// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
/// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

/// Tier for a two-sided p-value; only positive t earns a mark.
Tier significance_tier(double t, double p);

/// Paired t-test on d = a - b. Throws ConfigError for unequal lengths, n < 2, or constant differences.
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace censoring::stats
