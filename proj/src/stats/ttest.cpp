#include "censoring/stats/ttest.hpp"

#include "censoring/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace censoring::stats {

std::string_view symbol(Tier tier) {
    switch (tier) {
        case Tier::none: return "−";
        case Tier::p05: return "*";
        case Tier::p01: return "†";
        case Tier::p001: return "‡";
    }
    return "?";
}

namespace {

// Lentz's method for the continued fraction of I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) return h;
    }
    throw NumericError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("regularized_incomplete_beta: a and b must be > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("regularized_incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw ConfigError("student_t_cdf: df must be > 0");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

Tier significance_tier(double t, double p) {
    if (!(t > 0.0) || !(p <= 0.05)) return Tier::none;
    if (p <= 0.001) return Tier::p001;
    if (p <= 0.01) return Tier::p01;
    return Tier::p05;
}

PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ConfigError("paired_t_test: samples have lengths " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
    }
    const std::size_t n = a.size();
    if (n < 2) throw ConfigError("paired_t_test: need at least 2 pairs");
    bool constant = true;
    for (std::size_t i = 1; i < n; ++i) constant = constant && (a[i] - b[i]) == (a[0] - b[0]);
    if (constant) throw ConfigError("paired_t_test: all differences are identical (zero variance)");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (a[i] - b[i]) - mean;
        ss += r * r;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw ConfigError("paired_t_test: differences have zero variance");

    PairedTestResult r;
    r.df = static_cast<double>(n - 1);
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = regularized_incomplete_beta(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
    r.tier = significance_tier(r.t, r.p);
    return r;
}

}  // namespace censoring::stats
