#pragma once

#include "censoring/censor/censor.hpp"
#include "censoring/synth/generator.hpp"
#include "censoring/train/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace censoring::io {

/// Where trials come from: a generated synthetic population or an epoch file.
struct DatasetSource {
    std::optional<synth::SynthParams> synthetic;   ///< random spec built from these knobs
    std::optional<synth::GenModelSpec> explicit_spec;
    std::size_t trials_per_nuisance = 200;         ///< synthetic only
    std::filesystem::path epoch_file;
    int sessions_per_subject = 1;                  ///< for epoch files and explicit specs
    int nontarget_ratio = 0;                       ///< 0 keeps every trial
    std::uint64_t data_seed = 0;
};

struct GridSpec {
    std::vector<censor::Mode> modes{censor::Mode::marginal};
    std::vector<censor::Method> methods{censor::Method::density_ratio};
    std::vector<double> lambdas{1.0};
    std::vector<model::Projection> projections{model::Projection::trivial};
    std::vector<train::EvalPoint> eval_points{train::EvalPoint::final_epoch};
};

struct ExperimentConfig {
    DatasetSource dataset;
    std::size_t train_subjects = 8;
    std::size_t val_subjects = 0;
    std::size_t test_subjects = 2;
    std::vector<std::uint64_t> folds{0};
    std::vector<std::uint64_t> seeds{0};
    std::uint64_t master_seed = 0;
    /// Shared settings; mode, method, lambda, projection and eval point come from the grid.
    train::TrainConfig base;
    GridSpec grid;
    std::filesystem::path output_dir = "results";
    int workers = 1;
    bool save_checkpoints = false;

    /// Throws ConfigError for an ill-formed grid cell or empty seed/fold lists.
    void validate() const;
};

ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Synthetic dataset description used by make-synth: either knobs plus a seed, or an explicit spec.
struct SynthFileSpec {
    std::optional<synth::SynthParams> params;
    std::optional<synth::GenModelSpec> spec;
    std::uint64_t seed = 0;
    std::size_t trials = 1000;
};

SynthFileSpec parse_synth_spec(std::string_view json_text);
/// The generative model a description denotes (built from params when no explicit spec is given).
synth::GenModelSpec resolve_spec(const SynthFileSpec& file);
/// JSON text for an explicit spec; parse_synth_spec reads it back exactly.
std::string spec_to_json(const synth::GenModelSpec& spec);

}  // namespace censoring::io
