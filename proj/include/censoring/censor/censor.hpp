#pragma once

#include "censoring/nn/layers.hpp"
#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace censoring::censor {

enum class Mode { marginal, conditional, complementary };
enum class Method { adversarial, density_ratio, wasserstein };

std::string_view to_string(Mode mode);
std::string_view to_string(Method method);
Mode parse_mode(std::string_view text);
Method parse_method(std::string_view text);

struct CensorSpec {
    Method method = Method::density_ratio;
    Mode mode = Mode::marginal;
    std::size_t feature_dim = 0;  ///< T: K, or K/2 in complementary mode
    int nuisance = 0;
    int classes = 0;  ///< used only in conditional mode
    /// When > 0 the nuisance side is a real feature block of this width instead of one-hot s
    /// (density-ratio and Wasserstein only).
    std::size_t nuisance_features = 0;
    std::vector<std::size_t> hidden{128, 128};
    nn::Activation activation = nn::Activation::relu;
    int power_iterations = 1;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    void validate() const;
};

/// One mini-batch as seen by a censor. `s_perm` is needed by the density-ratio and Wasserstein
/// methods; `y` is needed exactly in conditional mode.
struct CensorBatch {
    nn::Matrix z;
    std::vector<int> s;
    std::vector<int> s_perm;
    std::vector<int> y;
    nn::Matrix s_features;       ///< replaces one-hot(s) when the spec asks for feature input
    nn::Matrix s_perm_features;  ///< replaces one-hot(s_perm)
};

struct Penalty {
    double value = 0.0;
    nn::Matrix grad_z;
};

/// Uniform random permutation of the labels; throws ConfigError for fewer than 2 entries.
std::vector<int> permute_nuisance(std::span<const int> s, nn::RngStream& rng);

/// The censor network J together with its role.
class CensorModel {
public:
    CensorModel() = default;
    CensorModel(CensorSpec spec, nn::RngStream& init_rng);
    /// Wraps a prepared network; its input and output widths must match the spec.
    CensorModel(CensorSpec spec, nn::Sequential net);

    const CensorSpec& spec() const noexcept { return spec_; }
    Method method() const noexcept { return spec_.method; }
    Mode mode() const noexcept { return spec_.mode; }

    /// Network input pairing z with the joint (permuted = false) or product nuisance column.
    nn::Matrix input(const CensorBatch& batch, bool permuted) const;

    /// L_censor, the quantity the task model minimizes (scaled by lambda).
    double penalty_value(const CensorBatch& batch) const;
    /// L_censor and its gradient with respect to batch.z. Leaves the network gradients zeroed.
    Penalty penalty(const CensorBatch& batch);

    /// The censor's own objective (always minimized by the censor update).
    double train_loss(const CensorBatch& batch) const;
    /// Adds d(train_loss)/d(theta_J) into the network gradients and returns the loss.
    double accumulate_train_gradients(const CensorBatch& batch);

    void refresh_spectral_norm(int iterations);
    void zero_grad() noexcept { net_.zero_grad(); }
    std::vector<nn::ParamRef> params(const std::string& prefix) { return net_.params(prefix); }
    std::vector<nn::BufferRef> buffers(const std::string& prefix) { return net_.buffers(prefix); }
    nn::Sequential& net() noexcept { return net_; }
    const nn::Sequential& net() const noexcept { return net_; }

private:
    void check_batch(const CensorBatch& batch, bool needs_perm) const;
    nn::Matrix stacked_input(const CensorBatch& batch) const;

    CensorSpec spec_;
    nn::Sequential net_;
};

/// Spec-level entry points; each throws ConfigError when the censor's method or mode does not fit.
double adv_censor_penalty(const CensorModel& censor, const CensorBatch& batch);
double adv_censor_train_loss(const CensorModel& censor, const CensorBatch& batch);
double dre_train_loss(const CensorModel& censor, const CensorBatch& batch);
double dre_censor_penalty(const CensorModel& censor, const CensorBatch& batch);
double wasserstein_censor_penalty(const CensorModel& censor, const CensorBatch& batch);
double complementary_combine(Mode mode, double penalty_z, double penalty_w);

}  // namespace censoring::censor
