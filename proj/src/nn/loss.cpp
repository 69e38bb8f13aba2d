#include "censoring/nn/loss.hpp"

#include "censoring/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace censoring::nn {

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto in = logits.row(r);
        auto o = out.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - mx);
            sum += o[c];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
    if (logits.rows() == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
    if (labels.size() != logits.rows()) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         logits.shape_string());
    }
    const auto n = static_cast<double>(logits.rows());
    LossResult result{0.0, Matrix(logits.rows(), logits.cols())};
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const int label = labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= logits.cols()) {
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                                    std::to_string(logits.cols()) + ")");
        }
        auto in = logits.row(r);
        auto g = result.grad.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            g[c] = std::exp(in[c] - mx);
            sum += g[c];
        }
        const double log_z = mx + std::log(sum);
        result.loss += log_z - in[static_cast<std::size_t>(label)];
        for (double& v : g) v /= sum;
        g[static_cast<std::size_t>(label)] -= 1.0;
        for (double& v : g) v /= n;
    }
    result.loss /= n;
    return result;
}

double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

LossResult logistic_terms(const Matrix& logits, std::span<const double> signs) {
    if (logits.cols() != 1) throw ShapeError("logistic_terms: expected one logit column, got " + logits.shape_string());
    if (signs.size() != logits.rows()) {
        throw ShapeError("logistic_terms: " + std::to_string(signs.size()) + " signs for " + logits.shape_string());
    }
    if (logits.rows() == 0) throw std::invalid_argument("logistic_terms: empty batch");
    const auto n = static_cast<double>(logits.rows());
    LossResult result{0.0, Matrix(logits.rows(), 1)};
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double x = logits(i, 0);
        if (!std::isfinite(x)) throw NumericError("logistic_terms: non-finite logit at row " + std::to_string(i));
        const double s = signs[i];
        result.loss += softplus(-s * x);
        // d/dx softplus(-s x) = -s * sigmoid(-s x)
        result.grad(i, 0) = -s * sigmoid(-s * x) / n;
    }
    result.loss /= n;
    return result;
}

}  // namespace censoring::nn
