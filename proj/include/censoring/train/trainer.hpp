#pragma once

#include "censoring/censor/censor.hpp"
#include "censoring/errors.hpp"
#include "censoring/model/task_model.hpp"
#include "censoring/nn/adamw.hpp"
#include "censoring/nn/rng.hpp"
#include "censoring/synth/trial_batch.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace censoring::train {

enum class EvalPoint { final_epoch, best_val };

std::string_view to_string(EvalPoint point);
EvalPoint parse_eval_point(std::string_view text);
std::string_view to_string(model::Projection projection);
model::Projection parse_projection(std::string_view text);

struct TrainConfig {
    censor::Mode mode = censor::Mode::marginal;
    censor::Method method = censor::Method::density_ratio;
    double lambda = 0.0;
    model::Projection projection = model::Projection::trivial;
    int epochs = 100;
    std::size_t batch_size = 1024;
    nn::AdamWConfig optimizer{};
    /// Unset means the censor shares the task optimizer settings.
    std::optional<nn::AdamWConfig> censor_optimizer;
    int censor_steps = 1;
    EvalPoint eval_point = EvalPoint::final_epoch;
    std::uint64_t seed = 0;
    int max_val_epochs = 30;

    /// Architecture; channels, samples and classes are taken from the training data.
    model::TaskModelConfig model{};
    std::vector<std::size_t> censor_hidden{128, 128};
    /// Unset picks abs for the Wasserstein critic and relu otherwise.
    std::optional<nn::Activation> censor_activation;
    int power_iterations = 1;

    void validate() const;
    /// Epochs actually run: best-val runs are capped at max_val_epochs.
    int epoch_budget() const;
    nn::AdamWConfig censor_optimizer_config() const { return censor_optimizer.value_or(optimizer); }
    bool censored() const noexcept { return lambda > 0.0; }
};

struct EpochLog {
    int epoch = 0;
    double task_ce = 0.0;
    double censor_penalty = 0.0;     ///< mean L_censor seen by the task update
    double censor_train_loss = 0.0;  ///< mean censor objective during its updates
    double train_ba = 0.0;
    std::optional<double> val_ba;

    bool operator==(const EpochLog&) const = default;
};

/// Loss components of one task update.
struct BatchLog {
    double task_ce = 0.0;
    double censor_penalty = 0.0;
    double total = 0.0;
};

/// Seeds of the independent streams of one run, derived from the run's root stream.
namespace streams {
inline constexpr std::uint64_t task_init = 1;
inline constexpr std::uint64_t censor_init = 2;
inline constexpr std::uint64_t shuffle = 3;
inline constexpr std::uint64_t permute = 4;
}  // namespace streams

/// Complete training state: restoring it and resuming reproduces the run bit-for-bit.
struct Checkpoint {
    model::TaskModel task;
    std::vector<censor::CensorModel> censors;  ///< one, or the z/w pair in complementary mode; idle when lambda = 0
    nn::AdamW task_optimizer;
    std::vector<nn::AdamW> censor_optimizers;
    int epoch = 0;  ///< epochs completed
    nn::RngStream shuffle_rng;
    nn::RngStream permute_rng;
};

/// Shape of the data a run is trained on.
struct DataShape {
    std::size_t channels = 1;
    std::size_t samples = 1;
    int classes = 2;
    int nuisance = 2;

    static DataShape of(const synth::TrialBatch& batch) {
        return {batch.channels, batch.samples, batch.classes, batch.nuisance};
    }
    bool operator==(const DataShape&) const = default;
};

/// Builds the untrained state for `config` and data of the given shape.
Checkpoint initial_checkpoint(const TrainConfig& config, const DataShape& shape, const nn::RngStream& root);

/// One run's alternating optimizer. Copyable; a copy continues identically.
class Trainer {
public:
    Trainer(TrainConfig config, Checkpoint state);

    /// Censor update(s) on the batch with task parameters frozen; returns the mean censor train loss.
    double censor_step(const nn::Matrix& x, std::span<const int> y, std::span<const int> s);
    /// Task update on CE + lambda * L_censor with censor parameters frozen.
    BatchLog task_step(const nn::Matrix& x, std::span<const int> y, std::span<const int> s);

    /// Shuffled pass over `train`, then evaluation. Throws NumericError on a non-finite loss.
    EpochLog run_epoch(const synth::TrialBatch& train, const synth::TrialBatch* val);

    const TrainConfig& config() const noexcept { return config_; }
    Checkpoint& state() noexcept { return state_; }
    const Checkpoint& state() const noexcept { return state_; }

private:
    censor::CensorBatch censor_batch(const nn::Matrix& features, std::span<const int> y, std::span<const int> s);
    std::vector<nn::Matrix> censor_features(const nn::Matrix& projected) const;

    TrainConfig config_;
    Checkpoint state_;
};

struct TrainResult {
    Checkpoint checkpoint;  ///< per the eval point
    std::vector<EpochLog> logs;
    int selected_epoch = 0;  ///< index into logs of the returned checkpoint
    bool failed = false;
    std::string diagnostic;
};

/// Trains from scratch. `val` must be given exactly when the eval point is best-val.
TrainResult train_run(const TrainConfig& config, const synth::TrialBatch& train, const synth::TrialBatch* val,
                      const nn::RngStream& root);
/// Continues `start` up to the configured epoch budget.
TrainResult train_run(const TrainConfig& config, const synth::TrialBatch& train, const synth::TrialBatch* val,
                      Checkpoint start);

/// Final: last epoch. Best-val: argmax of validation BA, earliest on ties. Throws ConfigError when
/// best-val is asked for without validation metrics.
std::size_t select_epoch(std::span<const EpochLog> logs, EvalPoint point);

template <typename T>
const T& select_checkpoint(std::span<const EpochLog> logs, std::span<const T> checkpoints, EvalPoint point) {
    if (checkpoints.size() != logs.size()) throw ConfigError("select_checkpoint: one checkpoint per epoch log expected");
    return checkpoints[select_epoch(logs, point)];
}

/// Balanced accuracy of the model's predictions on the batch.
double evaluate_balanced_accuracy(const model::TaskModel& model, const synth::TrialBatch& batch);

}  // namespace censoring::train
