#include "censoring/stats/aggregate.hpp"

#include "censoring/errors.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace censoring::stats {

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ConfigError("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile: p must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

Distribution describe(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    if (v.empty()) throw ConfigError("describe: empty sample");
    Distribution d;
    std::sort(v.begin(), v.end());
    d.min = v.front();
    d.max = v.back();
    d.q1 = quantile(v, 0.25);
    d.median = quantile(v, 0.5);
    d.q3 = quantile(v, 0.75);
    double sum = 0.0;
    for (double x : v) sum += x;
    d.mean = sum / static_cast<double>(v.size());
    return d;
}

bool group_less(const RunResult& a, const RunResult& b, std::span<const GroupField> fields) {
    for (GroupField f : fields) {
        switch (f) {
            case GroupField::mode:
                if (a.mode != b.mode) return a.mode < b.mode;
                break;
            case GroupField::method:
                if (a.method != b.method) return a.method < b.method;
                break;
            case GroupField::lambda:
                if (a.lambda != b.lambda) return a.lambda < b.lambda;
                break;
            case GroupField::projection:
                if (a.projection != b.projection) return a.projection < b.projection;
                break;
            case GroupField::eval_point:
                if (a.eval_point != b.eval_point) return a.eval_point < b.eval_point;
                break;
            case GroupField::seed:
                if (a.seed != b.seed) return a.seed < b.seed;
                break;
            case GroupField::fold:
                if (a.fold != b.fold) return a.fold < b.fold;
                break;
        }
    }
    return false;
}

std::vector<SummaryRow> aggregate(std::span<const RunResult> results, std::span<const GroupField> fields) {
    std::vector<const RunResult*> ok;
    for (const auto& r : results) {
        if (!r.failed) ok.push_back(&r);
    }
    const auto less = [&](const RunResult* a, const RunResult* b) { return group_less(*a, *b, fields); };
    std::stable_sort(ok.begin(), ok.end(), less);

    std::vector<SummaryRow> rows;
    for (std::size_t i = 0; i < ok.size();) {
        std::size_t j = i;
        std::vector<double> test;
        std::vector<double> ratio;
        while (j < ok.size() && !less(ok[i], ok[j])) {
            test.push_back(ok[j]->test_ba);
            ratio.push_back(ok[j]->overfit_ratio);
            ++j;
        }
        SummaryRow row;
        row.key = *ok[i];
        row.n = j - i;
        row.test_ba = describe(test);
        row.overfit_ratio = describe(ratio);
        rows.push_back(std::move(row));
        i = j;
    }
    return rows;
}

}  // namespace censoring::stats
