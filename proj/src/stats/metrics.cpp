#include "censoring/stats/metrics.hpp"

#include "censoring/errors.hpp"

#include <string>

namespace censoring::stats {

ConfusionCounts::ConfusionCounts(int classes) : classes_(classes) {
    if (classes < 1) throw ConfigError("ConfusionCounts: need at least one class");
    counts_.assign(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0);
}

ConfusionCounts::ConfusionCounts(int classes, std::span<const int> truth, std::span<const int> predicted)
    : ConfusionCounts(classes) {
    if (truth.size() != predicted.size()) {
        throw ShapeError("ConfusionCounts: " + std::to_string(truth.size()) + " labels but " +
                         std::to_string(predicted.size()) + " predictions");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], predicted[i]);
}

void ConfusionCounts::add(int truth, int predicted, std::uint64_t count) {
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
        throw ConfigError("ConfusionCounts: label pair (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                          ") outside [0, " + std::to_string(classes_) + ")");
    }
    counts_[static_cast<std::size_t>(truth * classes_ + predicted)] += count;
}

std::uint64_t ConfusionCounts::at(int truth, int predicted) const {
    return counts_.at(static_cast<std::size_t>(truth * classes_ + predicted));
}

std::uint64_t ConfusionCounts::row_total(int truth) const {
    std::uint64_t sum = 0;
    for (int p = 0; p < classes_; ++p) sum += at(truth, p);
    return sum;
}

std::uint64_t ConfusionCounts::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts_) sum += c;
    return sum;
}

double balanced_accuracy(const ConfusionCounts& confusion) {
    double sum = 0.0;
    for (int c = 0; c < confusion.classes(); ++c) {
        const auto n = confusion.row_total(c);
        if (n == 0) throw ConfigError("balanced_accuracy: class " + std::to_string(c) + " has no true instances");
        sum += static_cast<double>(confusion.at(c, c)) / static_cast<double>(n);
    }
    return sum / confusion.classes();
}

double balanced_accuracy(std::span<const int> truth, std::span<const int> predicted, int classes) {
    return balanced_accuracy(ConfusionCounts(classes, truth, predicted));
}

double overfit_ratio(double train_ba, double test_ba) {
    if (!(train_ba > 0.0)) throw ConfigError("overfit_ratio: train balanced accuracy must be > 0");
    return test_ba / train_ba;
}

}  // namespace censoring::stats
