#include "censoring/nn/layers.hpp"

#include "censoring/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace censoring::nn {

namespace {

void activate(Matrix& m, Activation act) {
    if (act == Activation::relu) {
        for (double& v : m.data()) v = v < 0.0 ? 0.0 : v + 0.0;
    } else if (act == Activation::abs) {
        for (double& v : m.data()) v = std::abs(v);
    }
}

// Multiplies grad by the activation derivative evaluated at the pre-activation values.
void activation_backward(Matrix& grad, const Matrix& pre, Activation act) {
    if (act == Activation::relu) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
            if (pre.data()[i] <= 0.0) grad.data()[i] = 0.0;
        }
    } else if (act == Activation::abs) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double p = pre.data()[i];
            grad.data()[i] *= p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0);
        }
    }
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// W^T u
std::vector<double> apply_transposed(const Matrix& w, std::span<const double> u) {
    std::vector<double> out(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const double ur = u[r];
        for (std::size_t c = 0; c < w.cols(); ++c) out[c] += w(r, c) * ur;
    }
    return out;
}


// W v
std::vector<double> apply_forward(const Matrix& w, std::span<const double> v) {
    std::vector<double> out(w.rows(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

void uniform_fill(std::span<double> values, double bound, RngStream& rng) {
    for (double& v : values) v = rng.uniform(-bound, bound);
}

void check_input(const char* who, const Matrix& input, std::size_t expected_cols) {
    if (input.cols() != expected_cols) {
        throw ShapeError(std::string(who) + ": input " + input.shape_string() + " does not match expected (batch x " +
                         std::to_string(expected_cols) + ")");
    }
}

}  // namespace

std::vector<double> random_unit_vector(std::size_t n, RngStream& rng) {
    std::vector<double> u(n);
    double norm = 0.0;
    while (norm < 1e-12) {
        for (double& x : u) x = rng.normal();
        norm = norm2(u);
    }
    for (double& x : u) x /= norm;
    return u;
}

SpectralNormResult spectral_normalize(const Matrix& weights, SpectralNormState& state) {
    bool any_nonzero = false;
    for (double v : weights.data()) {
        if (v != 0.0) {
            any_nonzero = true;
            break;
        }
    }
    if (!any_nonzero) throw std::invalid_argument("spectral_normalize: zero matrix has no dominant direction");
    if (state.u.size() != weights.rows()) {
        throw ShapeError("spectral_normalize: u has " + std::to_string(state.u.size()) + " entries, weights " +
                         weights.shape_string());
    }
    for (int it = 0; it < state.power_iterations; ++it) {
        auto v = apply_transposed(weights, state.u);
        const double vn = norm2(v);
        if (vn == 0.0) break;  // u orthogonal to the row space; keep it
        for (double& x : v) x /= vn;
        auto u = apply_forward(weights, v);
        const double un = norm2(u);
        if (un == 0.0) break;
        for (double& x : u) x /= un;
        state.u = std::move(u);
    }
    const double sigma = norm2(apply_transposed(weights, state.u));
    if (sigma == 0.0) throw std::invalid_argument("spectral_normalize: degenerate singular-value estimate");
    SpectralNormResult result{weights, sigma};
    scale_in_place(result.normalized, 1.0 / sigma);
    return result;
}

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act, RngStream& init_rng)
    : weights_(out, in), bias_(out, 0.0), activation_(act), grad_w_(out, in), grad_b_(out, 0.0) {
    if (in == 0 || out == 0) throw ShapeError("DenseLayer: zero-sized layer");
    uniform_fill(weights_.data(), 1.0 / std::sqrt(static_cast<double>(in)), init_rng);
}

DenseLayer::DenseLayer(Matrix weights, std::vector<double> bias, Activation act)
    : weights_(std::move(weights)),
      bias_(std::move(bias)),
      activation_(act),
      grad_w_(weights_.rows(), weights_.cols()),
      grad_b_(bias_.size(), 0.0) {
    if (bias_.size() != weights_.rows()) {
        throw ShapeError("DenseLayer: bias length " + std::to_string(bias_.size()) + " vs weights " +
                         weights_.shape_string());
    }
}

DenseLayer::SigmaTerms DenseLayer::sigma_terms() const {
    auto v = apply_transposed(weights_, sn_->u);
    const double sigma = norm2(v);
    if (sigma == 0.0) throw std::invalid_argument("DenseLayer: spectral norm estimate is zero");
    for (double& x : v) x /= sigma;
    return {sigma, std::move(v)};
}

Matrix DenseLayer::effective_weights() const {
    if (!sn_) return weights_;
    Matrix w = weights_;
    scale_in_place(w, 1.0 / sigma_terms().sigma);
    return w;
}

Matrix DenseLayer::apply(const Matrix& input, const Matrix& w, Matrix* pre) const {
    check_input("dense_forward", input, w.cols());
    Matrix out = matmul_transposed(input, w);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias_[c];
    }
    if (pre) *pre = out;
    activate(out, activation_);
    return out;
}

Matrix DenseLayer::infer(const Matrix& input) const {
    if (!sn_) return apply(input, weights_, nullptr);
    return apply(input, effective_weights(), nullptr);
}

Matrix DenseLayer::forward(const Matrix& input) {
    if (sn_) {
        cached_sigma_ = sigma_terms();
        cached_w_ = weights_;
        scale_in_place(cached_w_, 1.0 / cached_sigma_.sigma);
    }
    Matrix out = apply(input, sn_ ? cached_w_ : weights_, &cached_pre_);
    cached_input_ = input;
    has_cache_ = true;
    return out;
}

Matrix DenseLayer::backward(const Matrix& grad_output) {
    if (!has_cache_) throw std::logic_error("DenseLayer::backward called without a cached forward pass");
    if (grad_output.rows() != cached_input_.rows() || grad_output.cols() != out_dim()) {
        throw ShapeError("DenseLayer::backward: gradient " + grad_output.shape_string() + " vs output (" +
                         std::to_string(cached_input_.rows()) + "x" + std::to_string(out_dim()) + ")");
    }
    Matrix g = grad_output;
    activation_backward(g, cached_pre_, activation_);

    const Matrix& w_used = sn_ ? cached_w_ : weights_;
    Matrix grad_input = matmul(g, w_used);
    Matrix gw = transposed_matmul(g, cached_input_);  // d(loss)/d(W_used), out x in

    if (sn_) {
        // W_used = W / sigma with sigma = ||W^T u|| (u held fixed), d sigma / dW = u v^T.
        const double sigma = cached_sigma_.sigma;
        double inner = 0.0;
        for (std::size_t i = 0; i < gw.size(); ++i) inner += gw.data()[i] * weights_.data()[i];
        const double coef = inner / (sigma * sigma);
        for (std::size_t r = 0; r < gw.rows(); ++r) {
            for (std::size_t c = 0; c < gw.cols(); ++c) {
                gw(r, c) = gw(r, c) / sigma - coef * sn_->u[r] * cached_sigma_.v[c];
            }
        }
    }
    add_in_place(grad_w_, gw);
    for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) grad_b_[c] += g(r, c);
    }
    return grad_input;
}

void DenseLayer::enable_spectral_norm(RngStream& rng, int power_iterations) {
    sn_ = SpectralNormState{random_unit_vector(out_dim(), rng), power_iterations};
}

void DenseLayer::refresh_spectral_norm(int iterations) {
    if (!sn_) return;
    SpectralNormState state{sn_->u, iterations};
    spectral_normalize(weights_, state);
    sn_->u = std::move(state.u);
}

void DenseLayer::zero_grad() noexcept {
    std::fill(grad_w_.data().begin(), grad_w_.data().end(), 0.0);
    std::fill(grad_b_.begin(), grad_b_.end(), 0.0);
}

void DenseLayer::append_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", {weights_.rows(), weights_.cols()}, weights_.data(), grad_w_.data()});
    out.push_back({prefix + ".bias", {bias_.size()}, bias_, grad_b_});
}

void DenseLayer::append_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
    if (sn_) out.push_back({prefix + ".sn_u", {sn_->u.size()}, sn_->u});
}

// ---------------------------------------------------------------------------
// Conv1DLayer

Conv1DLayer::Conv1DLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_width,
                         std::size_t stride, std::size_t input_length, Activation act, RngStream& init_rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_width_(kernel_width),
      stride_(stride),
      input_length_(input_length),
      output_length_(0),
      activation_(act) {
    if (kernel_width == 0) throw ShapeError("Conv1DLayer: kernel width must be >= 1");
    if (stride == 0) throw ShapeError("Conv1DLayer: stride must be >= 1");
    if (in_channels == 0 || out_channels == 0) throw ShapeError("Conv1DLayer: zero channels");
    if (input_length < kernel_width) {
        throw ShapeError("Conv1DLayer: input length " + std::to_string(input_length) + " shorter than kernel " +
                         std::to_string(kernel_width));
    }
    output_length_ = (input_length - kernel_width) / stride + 1;
    kernels_ = Matrix(out_channels, in_channels * kernel_width);
    grad_k_ = Matrix(out_channels, in_channels * kernel_width);
    bias_.assign(out_channels, 0.0);
    grad_b_.assign(out_channels, 0.0);
    uniform_fill(kernels_.data(), 1.0 / std::sqrt(static_cast<double>(in_channels * kernel_width)), init_rng);
}

Matrix Conv1DLayer::apply(const Matrix& input, Matrix* pre) const {
    check_input("conv1d_forward", input, in_dim());
    Matrix out(input.rows(), out_dim());
    for (std::size_t b = 0; b < input.rows(); ++b) {
        auto x = input.row(b);
        auto y = out.row(b);
        for (std::size_t o = 0; o < out_channels_; ++o) {
            auto k = kernels_.row(o);
            for (std::size_t t = 0; t < output_length_; ++t) {
                double acc = bias_[o];
                const std::size_t start = t * stride_;
                for (std::size_t c = 0; c < in_channels_; ++c) {
                    const double* xs = x.data() + c * input_length_ + start;
                    const double* ks = k.data() + c * kernel_width_;
                    for (std::size_t j = 0; j < kernel_width_; ++j) acc += ks[j] * xs[j];
                }
                y[o * output_length_ + t] = acc;
            }
        }
    }
    if (pre) *pre = out;
    activate(out, activation_);
    return out;
}

Matrix Conv1DLayer::infer(const Matrix& input) const { return apply(input, nullptr); }

Matrix Conv1DLayer::forward(const Matrix& input) {
    Matrix out = apply(input, &cached_pre_);
    cached_input_ = input;
    has_cache_ = true;
    return out;
}

Matrix Conv1DLayer::backward(const Matrix& grad_output) {
    if (!has_cache_) throw std::logic_error("Conv1DLayer::backward called without a cached forward pass");
    if (grad_output.rows() != cached_input_.rows() || grad_output.cols() != out_dim()) {
        throw ShapeError("Conv1DLayer::backward: gradient " + grad_output.shape_string() + " does not match output");
    }
    Matrix g = grad_output;
    activation_backward(g, cached_pre_, activation_);
    Matrix grad_input(cached_input_.rows(), in_dim());
    for (std::size_t b = 0; b < g.rows(); ++b) {
        auto x = cached_input_.row(b);
        auto gx = grad_input.row(b);
        auto gy = g.row(b);
        for (std::size_t o = 0; o < out_channels_; ++o) {
            auto k = kernels_.row(o);
            auto gk = grad_k_.row(o);
            for (std::size_t t = 0; t < output_length_; ++t) {
                const double go = gy[o * output_length_ + t];
                if (go == 0.0) continue;
                grad_b_[o] += go;
                const std::size_t start = t * stride_;
                for (std::size_t c = 0; c < in_channels_; ++c) {
                    const std::size_t xo = c * input_length_ + start;
                    const std::size_t ko = c * kernel_width_;
                    for (std::size_t j = 0; j < kernel_width_; ++j) {
                        gk[ko + j] += go * x[xo + j];
                        gx[xo + j] += go * k[ko + j];
                    }
                }
            }
        }
    }
    return grad_input;
}

void Conv1DLayer::zero_grad() noexcept {
    std::fill(grad_k_.data().begin(), grad_k_.data().end(), 0.0);
    std::fill(grad_b_.begin(), grad_b_.end(), 0.0);
}

void Conv1DLayer::append_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".kernel", {out_channels_, in_channels_, kernel_width_}, kernels_.data(), grad_k_.data()});
    out.push_back({prefix + ".bias", {bias_.size()}, bias_, grad_b_});
}

// ---------------------------------------------------------------------------
// GlobalAvgPool1D

GlobalAvgPool1D::GlobalAvgPool1D(std::size_t channels, std::size_t length) : channels_(channels), length_(length) {
    if (channels == 0 || length == 0) throw ShapeError("GlobalAvgPool1D: empty shape");
}

Matrix GlobalAvgPool1D::infer(const Matrix& input) const {
    check_input("global_avg_pool", input, in_dim());
    Matrix out(input.rows(), channels_);
    const double inv = 1.0 / static_cast<double>(length_);
    for (std::size_t b = 0; b < input.rows(); ++b) {
        auto x = input.row(b);
        for (std::size_t c = 0; c < channels_; ++c) {
            double acc = 0.0;
            for (std::size_t t = 0; t < length_; ++t) acc += x[c * length_ + t];
            out(b, c) = acc * inv;
        }
    }
    return out;
}

Matrix GlobalAvgPool1D::forward(const Matrix& input) {
    Matrix out = infer(input);
    cached_batch_ = input.rows();
    has_cache_ = true;
    return out;
}

Matrix GlobalAvgPool1D::backward(const Matrix& grad_output) {
    if (!has_cache_) throw std::logic_error("GlobalAvgPool1D::backward called without a cached forward pass");
    if (grad_output.rows() != cached_batch_ || grad_output.cols() != channels_) {
        throw ShapeError("GlobalAvgPool1D::backward: gradient " + grad_output.shape_string() + " does not match output");
    }
    Matrix grad_input(cached_batch_, in_dim());
    const double inv = 1.0 / static_cast<double>(length_);
    for (std::size_t b = 0; b < cached_batch_; ++b) {
        for (std::size_t c = 0; c < channels_; ++c) {
            const double g = grad_output(b, c) * inv;
            for (std::size_t t = 0; t < length_; ++t) grad_input(b, c * length_ + t) = g;
        }
    }
    return grad_input;
}

// ---------------------------------------------------------------------------
// Sequential

Sequential::Sequential(std::vector<Layer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 1; i < layers_.size(); ++i) {
        const auto prev = std::visit([](const auto& l) { return l.out_dim(); }, layers_[i - 1]);
        const auto next = std::visit([](const auto& l) { return l.in_dim(); }, layers_[i]);
        if (prev != next) {
            throw ShapeError("Sequential: layer " + std::to_string(i - 1) + " outputs " + std::to_string(prev) +
                             " but layer " + std::to_string(i) + " expects " + std::to_string(next));
        }
    }
}

void Sequential::add(Layer layer) {
    if (!layers_.empty()) {
        const auto prev = out_dim();
        const auto next = std::visit([](const auto& l) { return l.in_dim(); }, layer);
        if (prev != next) {
            throw ShapeError("Sequential::add: previous output " + std::to_string(prev) + " vs new input " +
                             std::to_string(next));
        }
    }
    layers_.push_back(std::move(layer));
}

Matrix Sequential::forward(const Matrix& input) {
    Matrix x = input;
    for (auto& layer : layers_) x = std::visit([&](auto& l) { return l.forward(x); }, layer);
    return x;
}

Matrix Sequential::infer(const Matrix& input) const {
    Matrix x = input;
    for (const auto& layer : layers_) x = std::visit([&](const auto& l) { return l.infer(x); }, layer);
    return x;
}

Matrix Sequential::backward(const Matrix& grad_output) {
    Matrix g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = std::visit([&](auto& l) { return l.backward(g); }, *it);
    }
    return g;
}

void Sequential::zero_grad() noexcept {
    for (auto& layer : layers_) {
        std::visit(
            [](auto& l) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, GlobalAvgPool1D>) l.zero_grad();
            },
            layer);
    }
}

std::vector<ParamRef> Sequential::params(const std::string& prefix) {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        std::visit(
            [&](auto& l) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, GlobalAvgPool1D>) {
                    l.append_params(prefix + "." + std::to_string(i), out);
                }
            },
            layers_[i]);
    }
    return out;
}

std::vector<BufferRef> Sequential::buffers(const std::string& prefix) {
    std::vector<BufferRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (auto* dense = std::get_if<DenseLayer>(&layers_[i])) {
            dense->append_buffers(prefix + "." + std::to_string(i), out);
        }
    }
    return out;
}

std::size_t Sequential::parameter_count() {
    std::size_t n = 0;
    for (const auto& p : params("p")) n += p.values.size();
    return n;
}

void Sequential::enable_spectral_norm(RngStream& rng, int power_iterations) {
    for (auto& layer : layers_) {
        if (auto* dense = std::get_if<DenseLayer>(&layer)) dense->enable_spectral_norm(rng, power_iterations);
    }
}

void Sequential::refresh_spectral_norm(int iterations) {
    for (auto& layer : layers_) {
        if (auto* dense = std::get_if<DenseLayer>(&layer)) dense->refresh_spectral_norm(iterations);
    }
}

std::size_t Sequential::in_dim() const {
    if (layers_.empty()) throw std::logic_error("Sequential::in_dim on empty network");
    return std::visit([](const auto& l) { return l.in_dim(); }, layers_.front());
}

std::size_t Sequential::out_dim() const {
    if (layers_.empty()) throw std::logic_error("Sequential::out_dim on empty network");
    return std::visit([](const auto& l) { return l.out_dim(); }, layers_.back());
}

Sequential make_mlp(std::size_t in, std::span<const std::size_t> hidden, std::size_t out, RngStream& init_rng) {
    Sequential net;
    std::size_t prev = in;
    for (std::size_t h : hidden) {
        net.add(DenseLayer(prev, h, Activation::relu, init_rng));
        prev = h;
    }
    net.add(DenseLayer(prev, out, Activation::identity, init_rng));
    return net;
}

}  // namespace censoring::nn
