#pragma once

#include "censoring/stats/aggregate.hpp"
#include "censoring/stats/ttest.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace censoring::io {

struct ReportBox {
    stats::RunResult key;  ///< cell identity (mode, method, lambda, projection, eval point)
    std::size_t n = 0;
    stats::Distribution test_ba;
    /// Against the matching lambda = 0 runs paired by (seed, fold); unset when fewer than two pairs
    /// exist or the differences are constant.
    std::optional<stats::PairedTestResult> versus_control;
    std::size_t pairs = 0;
};

struct ReportFigure {
    std::string mode;  ///< "none" when only controls were run
    model::Projection projection = model::Projection::trivial;
    train::EvalPoint eval_point = train::EvalPoint::final_epoch;
    std::optional<stats::Distribution> control;
    std::vector<ReportBox> boxes;  ///< by method, then ascending lambda
    std::filesystem::path path;
};

struct Report {
    std::filesystem::path summary_path;
    std::vector<ReportFigure> figures;
};

/// Writes summary.csv and one SVG boxplot per (mode, projection, eval point) into `out_dir`.
/// Throws ConfigError when there is no successful run to report.
Report emit_report(const std::vector<stats::RunResult>& rows, const std::filesystem::path& out_dir);

/// The SVG text for one figure.
std::string render_boxplot(const ReportFigure& figure);

}  // namespace censoring::io
