#pragma once

#include "censoring/nn/matrix.hpp"

#include <span>
#include <vector>

namespace censoring::nn {

struct LossResult {
    double loss = 0.0;
    Matrix grad;  ///< d(loss)/d(input), same shape as the input
};

/// Row-wise softmax with max-shift.
Matrix softmax(const Matrix& logits);

/// Mean over rows of -log softmax(logits)[label]; gradient (softmax - onehot) / batch.
/// Throws std::out_of_range for labels outside [0, cols) and std::invalid_argument for an empty batch.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Numerically stable log(1 + exp(x)).
double softplus(double x) noexcept;
/// 1 / (1 + exp(-x)) without overflow.
double sigmoid(double x) noexcept;

/// Mean of softplus(-sign_i * logit_i), i.e. the mean of -log sigmoid(sign_i * logit_i).
/// `logits` is a single column (n x 1); signs are +1 or -1. Gradient is returned as (n x 1).
LossResult logistic_terms(const Matrix& logits, std::span<const double> signs);

}  // namespace censoring::nn
