#pragma once

#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"

#include <span>

namespace censoring::stats {

struct ProbeOptions {
    double test_fraction = 0.2;
    int steps = 300;
    double lr = 0.05;
    double weight_decay = 1e-4;
    std::size_t min_per_label = 10;
};

/// Held-out balanced accuracy of a linear softmax probe predicting `labels` from `features`.
/// Features are standardized with training-split statistics; the split is stratified by label.
/// Labels may be any integers; at least 2 distinct values with >= min_per_label rows each are required.
double probe_subject_accuracy(const nn::Matrix& features, std::span<const int> labels, nn::RngStream& rng,
                              const ProbeOptions& options = {});

}  // namespace censoring::stats
