#pragma once

#include "censoring/censor/censor.hpp"
#include "censoring/model/task_model.hpp"
#include "censoring/train/trainer.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace censoring::stats {

struct RunResult {
    std::uint64_t run_id = 0;
    std::uint64_t seed = 0;
    int fold = 0;
    censor::Mode mode = censor::Mode::marginal;
    censor::Method method = censor::Method::density_ratio;
    double lambda = 0.0;
    model::Projection projection = model::Projection::trivial;
    train::EvalPoint eval_point = train::EvalPoint::final_epoch;
    int epochs_trained = 0;
    double train_ba = 0.0;
    std::optional<double> val_ba;
    double test_ba = 0.0;
    double overfit_ratio = 0.0;
    double probe_ba = 0.0;
    bool failed = false;

    bool operator==(const RunResult&) const = default;
};

enum class GroupField { mode, method, lambda, projection, eval_point, seed, fold };

/// The grid-cell identity: everything except seed and fold.
inline const std::vector<GroupField> kGridCell{GroupField::mode, GroupField::method, GroupField::lambda,
                                               GroupField::projection, GroupField::eval_point};

/// Linear interpolation between order statistics (h = (n - 1) p).
double quantile(std::vector<double> values, double p);

struct Distribution {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

Distribution describe(std::span<const double> values);

struct SummaryRow {
    RunResult key;  ///< identifier fields of the group; others hold the first member's values
    std::size_t n = 0;
    Distribution test_ba;
    Distribution overfit_ratio;
};

/// One row per distinct value of `fields`, in ascending key order. Failed runs are skipped.
std::vector<SummaryRow> aggregate(std::span<const RunResult> results, std::span<const GroupField> fields = kGridCell);

/// Orders two results by the given fields only.
bool group_less(const RunResult& a, const RunResult& b, std::span<const GroupField> fields);

}  // namespace censoring::stats
