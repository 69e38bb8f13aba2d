#include "censoring/stats/probe.hpp"

#include "censoring/errors.hpp"
#include "censoring/nn/adamw.hpp"
#include "censoring/nn/layers.hpp"
#include "censoring/nn/loss.hpp"
#include "censoring/stats/metrics.hpp"

#include <cmath>
#include <map>
#include <string>

namespace censoring::stats {

using nn::Matrix;

double probe_subject_accuracy(const Matrix& features, std::span<const int> labels, nn::RngStream& rng,
                              const ProbeOptions& options) {
    if (features.rows() != labels.size()) throw ShapeError("probe: features and labels differ in length");
    if (features.cols() == 0) throw ShapeError("probe: no feature columns");
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
        throw ConfigError("probe: test fraction must lie in (0, 1)");
    }

    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    if (by_label.size() < 2) throw ConfigError("probe: need at least 2 distinct labels");
    for (const auto& [label, rows] : by_label) {
        if (rows.size() < options.min_per_label) {
            throw ConfigError("probe: label " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                              " rows, need " + std::to_string(options.min_per_label));
        }
    }

    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::vector<int> train_y;
    std::vector<int> test_y;
    int dense = 0;
    for (auto& [label, rows] : by_label) {
        rng.shuffle(std::span<std::size_t>(rows));
        auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(rows.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i < n_test) {
                test_rows.push_back(rows[i]);
                test_y.push_back(dense);
            } else {
                train_rows.push_back(rows[i]);
                train_y.push_back(dense);
            }
        }
        ++dense;
    }

    Matrix train_x = nn::gather_rows(features, train_rows);
    Matrix test_x = nn::gather_rows(features, test_rows);
    const std::size_t d = features.cols();
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < train_x.rows(); ++r) mean += train_x(r, c);
        mean /= static_cast<double>(train_x.rows());
        double var = 0.0;
        for (std::size_t r = 0; r < train_x.rows(); ++r) var += (train_x(r, c) - mean) * (train_x(r, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(train_x.rows()));
        const double scale = sd > 1e-12 ? 1.0 / sd : 0.0;
        for (std::size_t r = 0; r < train_x.rows(); ++r) train_x(r, c) = (train_x(r, c) - mean) * scale;
        for (std::size_t r = 0; r < test_x.rows(); ++r) test_x(r, c) = (test_x(r, c) - mean) * scale;
    }

    nn::Sequential probe;
    probe.add(nn::DenseLayer(Matrix(static_cast<std::size_t>(dense), d, 0.0),
                             std::vector<double>(static_cast<std::size_t>(dense), 0.0), nn::Activation::identity));
    nn::AdamW opt({.lr = options.lr, .weight_decay = options.weight_decay});
    for (int step = 0; step < options.steps; ++step) {
        probe.zero_grad();
        const auto loss = nn::softmax_cross_entropy(probe.forward(train_x), train_y);
        probe.backward(loss.grad);
        auto params = probe.params("probe");
        opt.step(params);
    }

    const Matrix logits = probe.infer(test_x);
    std::vector<int> predicted(test_x.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        predicted[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return balanced_accuracy(test_y, predicted, dense);
}

}  // namespace censoring::stats
