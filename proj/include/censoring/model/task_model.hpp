#pragma once

#include "censoring/nn/layers.hpp"
#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace censoring::model {

enum class Projection { trivial, nontrivial };

struct TaskModelConfig {
    std::size_t channels = 1;  ///< input channels; the MLP encoder sees channels * samples features
    std::size_t samples = 1;   ///< > 1 selects the convolutional encoder
    std::size_t latent_dim = 128;
    int classes = 2;
    Projection projection = Projection::trivial;
    std::vector<std::size_t> encoder_hidden{256, 256};
    std::vector<std::size_t> classifier_hidden{128, 128};
    std::vector<std::size_t> projector_hidden{128, 128};
    std::size_t conv_channels = 16;
    std::size_t conv_kernel = 7;
    std::size_t conv_stride = 2;

    void validate() const;
};

/// Encoder F (x -> z~), classifier G (z~ -> logits) and optional projector P (z~ -> z).
class TaskModel {
public:
    TaskModel() = default;
    TaskModel(const TaskModelConfig& config, nn::RngStream& init_rng);
    TaskModel(nn::Sequential encoder, nn::Sequential classifier, std::optional<nn::Sequential> projector);

    struct Outputs {
        nn::Matrix hidden;  ///< z~
        nn::Matrix logits;
        nn::Matrix projected;  ///< z
    };

    /// Caching forward through all three parts, for a following backward().
    Outputs forward(const nn::Matrix& x);
    /// Pushes gradients w.r.t. logits and w.r.t. z back into every parameter.
    void backward(const nn::Matrix& grad_logits, const nn::Matrix& grad_projected);

    nn::Matrix encode(const nn::Matrix& x) const;
    nn::Matrix logits(const nn::Matrix& hidden) const;
    nn::Matrix classify(const nn::Matrix& hidden) const;  ///< softmax posterior
    nn::Matrix project(const nn::Matrix& hidden) const;
    std::vector<int> predict(const nn::Matrix& x) const;

    void zero_grad() noexcept;
    std::vector<nn::ParamRef> params();
    std::vector<nn::BufferRef> buffers();

    std::size_t latent_dim() const noexcept { return classifier_.in_dim(); }
    std::size_t input_dim() const noexcept { return encoder_.in_dim(); }
    bool has_projector() const noexcept { return projector_.has_value(); }
    nn::Sequential& encoder() noexcept { return encoder_; }
    nn::Sequential& classifier() noexcept { return classifier_; }
    std::optional<nn::Sequential>& projector() noexcept { return projector_; }

private:
    nn::Sequential encoder_;
    nn::Sequential classifier_;
    std::optional<nn::Sequential> projector_;
};

struct LatentSplit {
    nn::Matrix z;
    nn::Matrix w;
};

/// First half of the columns is z, second half w. Throws ConfigError for an odd width.
LatentSplit split_latent(const nn::Matrix& projected);
nn::Matrix join_latent(const LatentSplit& split);

}  // namespace censoring::model
