#pragma once

#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace censoring::nn {

/// Elementwise activations.
enum class Activation { identity, relu, abs };

/// Mutable view of one parameter block and its gradient accumulator.
struct ParamRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> values;
    std::span<double> grads;
};

/// Non-trainable state that must survive a checkpoint (spectral-norm vectors).
struct BufferRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> values;
};

struct SpectralNormState {
    std::vector<double> u;  ///< left singular-vector estimate, unit norm
    int power_iterations = 1;
};

struct SpectralNormResult {
    Matrix normalized;
    double sigma = 0.0;
};

/// Runs `state.power_iterations` rounds of power iteration on W (updating state.u), then returns
/// W / sigma with sigma = ||W^T u||. Throws std::invalid_argument for an all-zero matrix.
SpectralNormResult spectral_normalize(const Matrix& weights, SpectralNormState& state);

/// Unit vector of the given size drawn uniformly from the sphere.
std::vector<double> random_unit_vector(std::size_t n, RngStream& rng);

class DenseLayer {
public:
    /// Fan-in scaled uniform weights U(-1/sqrt(in), 1/sqrt(in)), zero bias.
    DenseLayer(std::size_t in, std::size_t out, Activation act, RngStream& init_rng);
    DenseLayer(Matrix weights, std::vector<double> bias, Activation act);

    Matrix forward(const Matrix& input);
    Matrix infer(const Matrix& input) const;
    Matrix backward(const Matrix& grad_output);

    void enable_spectral_norm(RngStream& rng, int power_iterations = 1);
    bool spectral_norm_enabled() const noexcept { return sn_.has_value(); }
    /// Advances the power iteration on the persistent u vector.
    void refresh_spectral_norm(int iterations);
    const std::optional<SpectralNormState>& spectral_state() const noexcept { return sn_; }
    /// Weights as used in the forward pass (W / sigma under spectral normalization).
    Matrix effective_weights() const;

    std::size_t in_dim() const noexcept { return weights_.cols(); }
    std::size_t out_dim() const noexcept { return weights_.rows(); }
    Activation activation() const noexcept { return activation_; }
    const Matrix& weights() const noexcept { return weights_; }
    Matrix& weights() noexcept { return weights_; }
    const std::vector<double>& bias() const noexcept { return bias_; }
    std::vector<double>& bias() noexcept { return bias_; }
    const Matrix& weight_grad() const noexcept { return grad_w_; }
    const std::vector<double>& bias_grad() const noexcept { return grad_b_; }

    void zero_grad() noexcept;
    void append_params(const std::string& prefix, std::vector<ParamRef>& out);
    void append_buffers(const std::string& prefix, std::vector<BufferRef>& out);

private:
    struct SigmaTerms {
        double sigma;
        std::vector<double> v;
    };
    SigmaTerms sigma_terms() const;
    Matrix apply(const Matrix& input, const Matrix& w, Matrix* pre) const;

    Matrix weights_;
    std::vector<double> bias_;
    Activation activation_;
    Matrix grad_w_;
    std::vector<double> grad_b_;
    std::optional<SpectralNormState> sn_;

    bool has_cache_ = false;
    Matrix cached_input_;
    Matrix cached_pre_;
    Matrix cached_w_;
    SigmaTerms cached_sigma_{};
};

/// Stride-only 1-D convolution, no padding. Rows hold (channels x length) in channel-major order.
class Conv1DLayer {
public:
    Conv1DLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_width, std::size_t stride,
                std::size_t input_length, Activation act, RngStream& init_rng);

    Matrix forward(const Matrix& input);
    Matrix infer(const Matrix& input) const;
    Matrix backward(const Matrix& grad_output);

    std::size_t in_channels() const noexcept { return in_channels_; }
    std::size_t out_channels() const noexcept { return out_channels_; }
    std::size_t kernel_width() const noexcept { return kernel_width_; }
    std::size_t stride() const noexcept { return stride_; }
    std::size_t input_length() const noexcept { return input_length_; }
    std::size_t output_length() const noexcept { return output_length_; }
    std::size_t in_dim() const noexcept { return in_channels_ * input_length_; }
    std::size_t out_dim() const noexcept { return out_channels_ * output_length_; }

    /// (out_channels x in_channels*kernel_width)
    Matrix& kernels() noexcept { return kernels_; }
    const Matrix& kernels() const noexcept { return kernels_; }
    std::vector<double>& bias() noexcept { return bias_; }

    void zero_grad() noexcept;
    void append_params(const std::string& prefix, std::vector<ParamRef>& out);

private:
    Matrix apply(const Matrix& input, Matrix* pre) const;

    std::size_t in_channels_;
    std::size_t out_channels_;
    std::size_t kernel_width_;
    std::size_t stride_;
    std::size_t input_length_;
    std::size_t output_length_;
    Activation activation_;
    Matrix kernels_;
    std::vector<double> bias_;
    Matrix grad_k_;
    std::vector<double> grad_b_;

    bool has_cache_ = false;
    Matrix cached_input_;
    Matrix cached_pre_;
};

/// Mean over the time axis: (channels x length) -> (channels).
class GlobalAvgPool1D {
public:
    GlobalAvgPool1D(std::size_t channels, std::size_t length);

    Matrix forward(const Matrix& input);
    Matrix infer(const Matrix& input) const;
    Matrix backward(const Matrix& grad_output);

    std::size_t in_dim() const noexcept { return channels_ * length_; }
    std::size_t out_dim() const noexcept { return channels_; }

private:
    std::size_t channels_;
    std::size_t length_;
    bool has_cache_ = false;
    std::size_t cached_batch_ = 0;
};

using Layer = std::variant<DenseLayer, Conv1DLayer, GlobalAvgPool1D>;

/// Feed-forward stack with cached intermediates for reverse-mode gradients.
class Sequential {
public:
    Sequential() = default;
    explicit Sequential(std::vector<Layer> layers);

    void add(Layer layer);

    Matrix forward(const Matrix& input);
    Matrix infer(const Matrix& input) const;
    /// Accumulates parameter gradients and returns d(loss)/d(input).
    /// Throws std::logic_error when no forward pass has been cached.
    Matrix backward(const Matrix& grad_output);

    void zero_grad() noexcept;
    std::vector<ParamRef> params(const std::string& prefix);
    std::vector<BufferRef> buffers(const std::string& prefix);
    std::size_t parameter_count();

    void enable_spectral_norm(RngStream& rng, int power_iterations = 1);
    void refresh_spectral_norm(int iterations);

    bool empty() const noexcept { return layers_.empty(); }
    std::size_t in_dim() const;
    std::size_t out_dim() const;
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

private:
    std::vector<Layer> layers_;
};

/// Dense stack in -> hidden... -> out with relu between layers and identity output.
Sequential make_mlp(std::size_t in, std::span<const std::size_t> hidden, std::size_t out, RngStream& init_rng);

}  // namespace censoring::nn
