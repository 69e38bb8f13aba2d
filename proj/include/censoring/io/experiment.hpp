#pragma once

#include "censoring/io/config.hpp"
#include "censoring/stats/aggregate.hpp"
#include "censoring/synth/splits.hpp"

#include <functional>
#include <string>
#include <vector>

namespace censoring::io {

/// Stream of the master seed that draws subject splits.
inline constexpr std::uint64_t kSplitStream = 0x5350'4c49'54ULL;
/// Stream of a run's root used by the subject probe.
inline constexpr std::uint64_t kProbeStream = 5;

struct Dataset {
    synth::TrialBatch batch;
    int sessions_per_subject = 1;
    std::vector<int> subjects;  ///< sorted, distinct
    std::vector<std::string> warnings;
};

/// Loads or generates the trials once and applies non-target subsampling.
Dataset load_dataset(const DatasetSource& source);

/// One (seed, fold, grid cell) job; lambda = 0 marks a control.
struct RunSpec {
    std::uint64_t run_id = 0;
    std::uint64_t seed = 0;
    std::uint64_t fold = 0;
    train::TrainConfig config;
};

/// Runs in output order: by seed, then fold, then grid index. Each (projection, eval point)
/// contributes a control ahead of its censored cells.
std::vector<RunSpec> enumerate_runs(const ExperimentConfig& config);

/// The run's root stream; it depends on (master seed, seed, fold) only, so cells share initializations.
nn::RngStream run_root(std::uint64_t master_seed, std::uint64_t seed, std::uint64_t fold);

synth::SubjectSplit fold_split(const ExperimentConfig& config, const Dataset& data, std::uint64_t fold);

struct RunOutput {
    stats::RunResult result;
    std::string diagnostic;
    std::optional<train::Checkpoint> checkpoint;  ///< filled when kept
    train::DataShape shape;                       ///< of the training set the checkpoint was fit on
};

RunOutput execute_run(const ExperimentConfig& config, const Dataset& data, const RunSpec& spec,
                      bool keep_checkpoint = false);

struct ExperimentOutput {
    std::vector<stats::RunResult> rows;
    std::vector<std::string> diagnostics;  ///< one line per failed run
    std::size_t failures = 0;
};

/// Runs the whole sweep. Writes results.csv and metadata.json into the output directory when
/// `write_files` is set; rows are appended in run order as soon as all earlier runs are done.
ExperimentOutput run_experiment(const ExperimentConfig& config, bool write_files = true);

}  // namespace censoring::io
