#include "censoring/model/task_model.hpp"

#include "censoring/errors.hpp"
#include "censoring/nn/loss.hpp"

#include <string>

namespace censoring::model {

using nn::Matrix;

void TaskModelConfig::validate() const {
    if (channels == 0 || samples == 0) throw ConfigError("TaskModelConfig: channels and samples must be >= 1");
    if (latent_dim == 0) throw ConfigError("TaskModelConfig: latent_dim must be >= 1");
    if (classes < 2) throw ConfigError("TaskModelConfig: need at least 2 classes");
    if (samples > 1) {
        if (conv_kernel == 0 || conv_stride == 0 || conv_channels == 0) {
            throw ConfigError("TaskModelConfig: conv kernel, stride and channels must be >= 1");
        }
        if (samples < conv_kernel) throw ConfigError("TaskModelConfig: samples shorter than the conv kernel");
        const std::size_t first = (samples - conv_kernel) / conv_stride + 1;
        if (first < conv_kernel) throw ConfigError("TaskModelConfig: second conv block has no output samples");
    }
}

TaskModel::TaskModel(const TaskModelConfig& config, nn::RngStream& init_rng) {
    config.validate();
    const auto classes = static_cast<std::size_t>(config.classes);
    if (config.samples == 1) {
        encoder_ = nn::make_mlp(config.channels, config.encoder_hidden, config.latent_dim, init_rng);
    } else {
        const std::size_t k = config.conv_kernel;
        const std::size_t st = config.conv_stride;
        const std::size_t c = config.conv_channels;
        nn::Conv1DLayer first(config.channels, c, k, st, config.samples, nn::Activation::relu, init_rng);
        nn::Conv1DLayer second(c, c, k, st, first.output_length(), nn::Activation::relu, init_rng);
        const std::size_t pooled_len = second.output_length();
        encoder_.add(std::move(first));
        encoder_.add(std::move(second));
        encoder_.add(nn::GlobalAvgPool1D(c, pooled_len));
        encoder_.add(nn::DenseLayer(c, config.latent_dim, nn::Activation::identity, init_rng));
    }
    classifier_ = nn::make_mlp(config.latent_dim, config.classifier_hidden, classes, init_rng);
    if (config.projection == Projection::nontrivial) {
        projector_ = nn::make_mlp(config.latent_dim, config.projector_hidden, config.latent_dim, init_rng);
    }
}

TaskModel::TaskModel(nn::Sequential encoder, nn::Sequential classifier, std::optional<nn::Sequential> projector)
    : encoder_(std::move(encoder)), classifier_(std::move(classifier)), projector_(std::move(projector)) {
    if (encoder_.out_dim() != classifier_.in_dim()) {
        throw ShapeError("TaskModel: encoder emits " + std::to_string(encoder_.out_dim()) + " features, classifier takes " +
                         std::to_string(classifier_.in_dim()));
    }
    if (projector_ && (projector_->in_dim() != encoder_.out_dim() || projector_->out_dim() != encoder_.out_dim())) {
        throw ShapeError("TaskModel: projector must map K -> K with K = " + std::to_string(encoder_.out_dim()));
    }
}

TaskModel::Outputs TaskModel::forward(const Matrix& x) {
    Outputs out;
    out.hidden = encoder_.forward(x);
    out.logits = classifier_.forward(out.hidden);
    out.projected = projector_ ? projector_->forward(out.hidden) : out.hidden;
    return out;
}

void TaskModel::backward(const Matrix& grad_logits, const Matrix& grad_projected) {
    Matrix grad_hidden = classifier_.backward(grad_logits);
    if (projector_) {
        nn::add_in_place(grad_hidden, projector_->backward(grad_projected));
    } else {
        nn::add_in_place(grad_hidden, grad_projected);
    }
    encoder_.backward(grad_hidden);
}

Matrix TaskModel::encode(const Matrix& x) const { return encoder_.infer(x); }

Matrix TaskModel::logits(const Matrix& hidden) const { return classifier_.infer(hidden); }

Matrix TaskModel::classify(const Matrix& hidden) const { return nn::softmax(logits(hidden)); }

Matrix TaskModel::project(const Matrix& hidden) const {
    if (hidden.cols() != latent_dim()) {
        throw ShapeError("project: input " + hidden.shape_string() + " does not have K = " + std::to_string(latent_dim()) +
                         " columns");
    }
    return projector_ ? projector_->infer(hidden) : hidden;
}

std::vector<int> TaskModel::predict(const Matrix& x) const {
    const Matrix l = logits(encode(x));
    std::vector<int> out(l.rows());
    for (std::size_t r = 0; r < l.rows(); ++r) {
        auto row = l.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

void TaskModel::zero_grad() noexcept {
    encoder_.zero_grad();
    classifier_.zero_grad();
    if (projector_) projector_->zero_grad();
}

std::vector<nn::ParamRef> TaskModel::params() {
    auto out = encoder_.params("encoder");
    for (auto& p : classifier_.params("classifier")) out.push_back(std::move(p));
    if (projector_) {
        for (auto& p : projector_->params("projector")) out.push_back(std::move(p));
    }
    return out;
}

std::vector<nn::BufferRef> TaskModel::buffers() {
    auto out = encoder_.buffers("encoder");
    for (auto& b : classifier_.buffers("classifier")) out.push_back(std::move(b));
    if (projector_) {
        for (auto& b : projector_->buffers("projector")) out.push_back(std::move(b));
    }
    return out;
}

LatentSplit split_latent(const Matrix& projected) {
    if (projected.cols() % 2 != 0) {
        throw ConfigError("split_latent: latent width " + std::to_string(projected.cols()) + " is odd");
    }
    const std::size_t half = projected.cols() / 2;
    return {nn::column_slice(projected, 0, half), nn::column_slice(projected, half, half)};
}

Matrix join_latent(const LatentSplit& split) {
    const Matrix parts[] = {split.z, split.w};
    return nn::hconcat(parts);
}

}  // namespace censoring::model
