#include "censoring/train/trainer.hpp"

#include "censoring/nn/loss.hpp"
#include "censoring/stats/metrics.hpp"

#include <cmath>
#include <string>

namespace censoring::train {

using nn::Matrix;

std::string_view to_string(EvalPoint point) { return point == EvalPoint::best_val ? "best-val" : "final"; }

EvalPoint parse_eval_point(std::string_view text) {
    if (text == "final") return EvalPoint::final_epoch;
    if (text == "best-val" || text == "best_val") return EvalPoint::best_val;
    throw ConfigError("unknown eval point '" + std::string(text) + "'");
}

std::string_view to_string(model::Projection projection) {
    return projection == model::Projection::nontrivial ? "nontrivial" : "trivial";
}

model::Projection parse_projection(std::string_view text) {
    if (text == "trivial") return model::Projection::trivial;
    if (text == "nontrivial" || text == "non-trivial") return model::Projection::nontrivial;
    throw ConfigError("unknown projection '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("TrainConfig: lambda must be finite and >= 0");
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch size must be >= 1");
    if (censored() && batch_size < 2) {
        throw ConfigError("TrainConfig: lambda > 0 needs batches of >= 2 for the permuted nuisance sample");
    }
    if (censor_steps < 1) throw ConfigError("TrainConfig: censor steps per task step must be >= 1");
    if (max_val_epochs < 1) throw ConfigError("TrainConfig: max_val_epochs must be >= 1");
    if (!(optimizer.lr > 0.0) || !(censor_optimizer_config().lr > 0.0)) {
        throw ConfigError("TrainConfig: learning rates must be > 0");
    }
    if (power_iterations < 1) throw ConfigError("TrainConfig: power_iterations must be >= 1");
    if (mode == censor::Mode::complementary && model.latent_dim % 2 != 0) {
        throw ConfigError("TrainConfig: complementary mode needs an even latent size");
    }
}

int TrainConfig::epoch_budget() const {
    return eval_point == EvalPoint::best_val ? std::min(epochs, max_val_epochs) : epochs;
}

Checkpoint initial_checkpoint(const TrainConfig& config, const DataShape& shape, const nn::RngStream& root) {
    config.validate();
    model::TaskModelConfig mc = config.model;
    mc.channels = shape.channels;
    mc.samples = shape.samples;
    mc.classes = shape.classes;
    mc.projection = config.projection;

    Checkpoint state;
    nn::RngStream task_rng = root.derive(streams::task_init);
    state.task = model::TaskModel(mc, task_rng);
    state.task_optimizer = nn::AdamW(config.optimizer);
    const bool complementary = config.mode == censor::Mode::complementary;
    censor::CensorSpec spec{
        .method = config.method,
        .mode = config.mode,
        .feature_dim = complementary ? mc.latent_dim / 2 : mc.latent_dim,
        .nuisance = shape.nuisance,
        .classes = shape.classes,
        .hidden = config.censor_hidden,
        .activation = config.censor_activation.value_or(
            config.method == censor::Method::wasserstein ? nn::Activation::abs : nn::Activation::relu),
        .power_iterations = config.power_iterations,
    };
    nn::RngStream censor_rng = root.derive(streams::censor_init);
    for (int i = 0; i < (complementary ? 2 : 1); ++i) {
        state.censors.emplace_back(spec, censor_rng);
        state.censor_optimizers.emplace_back(config.censor_optimizer_config());
    }
    state.shuffle_rng = root.derive(streams::shuffle);
    state.permute_rng = root.derive(streams::permute);
    return state;
}

Trainer::Trainer(TrainConfig config, Checkpoint state) : config_(std::move(config)), state_(std::move(state)) {
    config_.validate();
    const std::size_t expected = config_.mode == censor::Mode::complementary ? 2 : 1;
    if (state_.censors.size() != expected || state_.censor_optimizers.size() != expected) {
        throw ConfigError("Trainer: state holds " + std::to_string(state_.censors.size()) + " censors, config needs " +
                          std::to_string(expected));
    }
}

std::vector<Matrix> Trainer::censor_features(const Matrix& projected) const {
    if (config_.mode != censor::Mode::complementary) return {projected};
    auto split = model::split_latent(projected);
    return {std::move(split.z), std::move(split.w)};
}

censor::CensorBatch Trainer::censor_batch(const Matrix& features, std::span<const int> y, std::span<const int> s) {
    censor::CensorBatch b;
    b.z = features;
    b.s.assign(s.begin(), s.end());
    if (config_.mode == censor::Mode::conditional) b.y.assign(y.begin(), y.end());
    return b;
}

double Trainer::censor_step(const Matrix& x, std::span<const int> y, std::span<const int> s) {
    if (!config_.censored()) return 0.0;
    const auto features = censor_features(state_.task.project(state_.task.encode(x)));
    double total = 0.0;
    for (int step = 0; step < config_.censor_steps; ++step) {
        const auto s_perm = censor::permute_nuisance(s, state_.permute_rng);
        for (std::size_t i = 0; i < state_.censors.size(); ++i) {
            auto& c = state_.censors[i];
            auto batch = censor_batch(features[i], y, s);
            batch.s_perm = s_perm;
            c.refresh_spectral_norm(c.spec().power_iterations);
            c.zero_grad();
            const double loss = c.accumulate_train_gradients(batch);
            if (!std::isfinite(loss)) throw NumericError("non-finite censor train loss");
            auto params = c.params("censor");
            state_.censor_optimizers[i].step(params);
            total += loss;
        }
    }
    return total / static_cast<double>(config_.censor_steps * static_cast<int>(state_.censors.size()));
}

BatchLog Trainer::task_step(const Matrix& x, std::span<const int> y, std::span<const int> s) {
    auto& task = state_.task;
    const auto out = task.forward(x);
    const auto ce = nn::softmax_cross_entropy(out.logits, y);

    BatchLog log{.task_ce = ce.loss};
    Matrix grad_projected(out.projected.rows(), out.projected.cols());
    if (config_.censored()) {
        const auto features = censor_features(out.projected);
        const auto s_perm = censor::permute_nuisance(s, state_.permute_rng);
        std::vector<Matrix> grads;
        std::vector<double> values;
        for (std::size_t i = 0; i < state_.censors.size(); ++i) {
            auto batch = censor_batch(features[i], y, s);
            batch.s_perm = s_perm;
            auto p = state_.censors[i].penalty(batch);
            values.push_back(p.value);
            grads.push_back(std::move(p.grad_z));
        }
        if (config_.mode == censor::Mode::complementary) {
            log.censor_penalty = censor::complementary_combine(config_.mode, values[0], values[1]);
            nn::scale_in_place(grads[1], -1.0);
            grad_projected = nn::hconcat(grads);
        } else {
            log.censor_penalty = values[0];
            grad_projected = std::move(grads[0]);
        }
        nn::scale_in_place(grad_projected, config_.lambda);
    }
    log.total = log.task_ce + config_.lambda * log.censor_penalty;
    if (!std::isfinite(log.total)) {
        throw NumericError("non-finite task loss (ce " + std::to_string(log.task_ce) + ", penalty " +
                           std::to_string(log.censor_penalty) + ")");
    }
    task.zero_grad();
    task.backward(ce.grad, grad_projected);
    auto params = task.params();
    state_.task_optimizer.step(params);
    return log;
}

EpochLog Trainer::run_epoch(const synth::TrialBatch& train, const synth::TrialBatch* val) {
    const std::size_t n = train.size();
    if (n == 0) throw ConfigError("run_epoch: empty training set");
    const auto order = state_.shuffle_rng.permutation(n);

    EpochLog log;
    log.epoch = state_.epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config_.batch_size) {
        const std::size_t count = std::min(config_.batch_size, n - start);
        if (count < 2) break;
        const std::span<const std::size_t> idx(order.data() + start, count);
        const Matrix x = nn::gather_rows(train.x, idx);
        std::vector<int> y;
        std::vector<int> s;
        y.reserve(count);
        s.reserve(count);
        for (std::size_t i : idx) {
            y.push_back(train.y[i]);
            s.push_back(train.s[i]);
        }
        try {
            log.censor_train_loss += censor_step(x, y, s);
            const auto b = task_step(x, y, s);
            log.task_ce += b.task_ce;
            log.censor_penalty += b.censor_penalty;
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(state_.epoch) + ", batch " + std::to_string(batches) + ": " +
                               e.what());
        }
        ++batches;
    }
    if (batches > 0) {
        log.task_ce /= static_cast<double>(batches);
        log.censor_penalty /= static_cast<double>(batches);
        log.censor_train_loss /= static_cast<double>(batches);
    }
    ++state_.epoch;
    log.train_ba = evaluate_balanced_accuracy(state_.task, train);
    if (val) log.val_ba = evaluate_balanced_accuracy(state_.task, *val);
    return log;
}

TrainResult train_run(const TrainConfig& config, const synth::TrialBatch& train, const synth::TrialBatch* val,
                      const nn::RngStream& root) {
    config.validate();
    if (train.size() == 0) throw ConfigError("train_run: empty training set");
    return train_run(config, train, val,
                     initial_checkpoint(config, DataShape::of(train), root));
}

TrainResult train_run(const TrainConfig& config, const synth::TrialBatch& train, const synth::TrialBatch* val,
                      Checkpoint start) {
    const bool best_val = config.eval_point == EvalPoint::best_val;
    if (best_val != (val != nullptr)) {
        throw ConfigError(best_val ? "train_run: best-val checkpointing needs a validation set"
                                   : "train_run: a validation set is only used with best-val checkpointing");
    }
    if (train.size() == 0) throw ConfigError("train_run: empty training set");
    Trainer trainer(config, std::move(start));

    TrainResult result;
    std::optional<Checkpoint> best;
    double best_ba = -1.0;
    while (trainer.state().epoch < config.epoch_budget()) {
        try {
            result.logs.push_back(trainer.run_epoch(train, val));
        } catch (const NumericError& e) {
            result.failed = true;
            result.diagnostic = e.what();
            break;
        }
        if (best_val && *result.logs.back().val_ba > best_ba) {
            best_ba = *result.logs.back().val_ba;
            best = trainer.state();
            result.selected_epoch = static_cast<int>(result.logs.size()) - 1;
        }
    }
    if (best_val && best) {
        result.checkpoint = std::move(*best);
    } else {
        result.checkpoint = trainer.state();
        result.selected_epoch = result.logs.empty() ? 0 : static_cast<int>(result.logs.size()) - 1;
    }
    return result;
}

std::size_t select_epoch(std::span<const EpochLog> logs, EvalPoint point) {
    if (logs.empty()) throw ConfigError("select_checkpoint: no epochs logged");
    if (point == EvalPoint::final_epoch) return logs.size() - 1;
    std::size_t best = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        if (!logs[i].val_ba) throw ConfigError("select_checkpoint: best-val needs validation accuracy for every epoch");
        if (*logs[i].val_ba > *logs[best].val_ba) best = i;
    }
    return best;
}

double evaluate_balanced_accuracy(const model::TaskModel& model, const synth::TrialBatch& batch) {
    return stats::balanced_accuracy(batch.y, model.predict(batch.x), batch.classes);
}

}  // namespace censoring::train
