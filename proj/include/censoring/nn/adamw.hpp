#pragma once

#include "censoring/nn/layers.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace censoring::nn {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    bool operator==(const AdamWConfig&) const = default;
};

/// AdamW with bias correction and decoupled weight decay:
///   w <- w * (1 - lr * wd)
///   w <- w - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
public:
    AdamW() = default;
    explicit AdamW(AdamWConfig config);

    /// Applies one update to every block. Moment buffers are allocated on first use and the
    /// block layout must stay fixed afterwards.
    void step(std::span<const ParamRef> params);

    const AdamWConfig& config() const noexcept { return config_; }
    std::uint64_t step_count() const noexcept { return step_; }

    /// Moment buffers, one per parameter block, for checkpointing.
    std::vector<std::vector<double>>& first_moments() noexcept { return m_; }
    std::vector<std::vector<double>>& second_moments() noexcept { return v_; }
    void set_step_count(std::uint64_t step) noexcept { step_ = step; }

    bool operator==(const AdamW&) const = default;

private:
    AdamWConfig config_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace censoring::nn
