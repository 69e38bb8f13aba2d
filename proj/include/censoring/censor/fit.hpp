#pragma once

#include "censoring/censor/censor.hpp"
#include "censoring/nn/adamw.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace censoring::censor {

/// A fixed sample of (z, s[, y]) pairs for fitting a censor in isolation.
struct PairedSample {
    nn::Matrix z;
    std::vector<int> s;
    std::vector<int> y;
    nn::Matrix s_features;  ///< set when the censor reads real-valued nuisance features

    std::size_t size() const noexcept { return z.rows(); }
    /// Rows `indices`, with the nuisance side permuted within the selection.
    CensorBatch batch(std::span<const std::size_t> indices, nn::RngStream& rng) const;
};

struct FitOptions {
    int epochs = 20;
    std::size_t batch_size = 256;
    nn::AdamWConfig optimizer{.lr = 1e-3, .weight_decay = 0.0};
};

/// Trains only the censor on its own objective; returns the mean train loss per epoch.
std::vector<double> fit_censor(CensorModel& censor, const PairedSample& sample, const FitOptions& options,
                               nn::RngStream& rng);

/// Penalty value over the whole sample (one within-sample permutation for the product term).
double evaluate_penalty(const CensorModel& censor, const PairedSample& sample, nn::RngStream& rng);
/// Censor train loss over the whole sample.
double evaluate_train_loss(const CensorModel& censor, const PairedSample& sample, nn::RngStream& rng);

}  // namespace censoring::censor
