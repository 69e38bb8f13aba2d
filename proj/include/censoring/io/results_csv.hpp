#pragma once

#include "censoring/stats/aggregate.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace censoring::io {

inline constexpr const char* kResultsHeader =
    "run_id,seed,fold,censor_mode,censor_method,lambda,projection,eval_point,epochs_trained,train_ba,val_ba,"
    "test_ba,overfit_ratio,probe_ba,status";

/// Control rows (lambda = 0) print "none" for mode and method. Failed rows leave the metrics blank.
std::string format_result_row(const stats::RunResult& row);
void write_results_csv(std::ostream& out, const std::vector<stats::RunResult>& rows);

/// Throws FormatError naming the line of the first malformed row.
std::vector<stats::RunResult> read_results_csv(std::istream& in);
std::vector<stats::RunResult> read_results_csv(const std::filesystem::path& path);

}  // namespace censoring::io
