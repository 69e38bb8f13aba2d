#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace censoring::stats {

/// C x C counts, rows = true class, columns = predicted class.
class ConfusionCounts {
public:
    explicit ConfusionCounts(int classes);
    ConfusionCounts(int classes, std::span<const int> truth, std::span<const int> predicted);

    void add(int truth, int predicted, std::uint64_t count = 1);
    std::uint64_t at(int truth, int predicted) const;
    std::uint64_t row_total(int truth) const;
    std::uint64_t total() const;
    int classes() const noexcept { return classes_; }

private:
    int classes_;
    std::vector<std::uint64_t> counts_;
};

/// Mean per-class recall. Throws ConfigError when some class has no true instance.
double balanced_accuracy(const ConfusionCounts& confusion);
double balanced_accuracy(std::span<const int> truth, std::span<const int> predicted, int classes);

/// test / train. Throws ConfigError for train_ba <= 0; values above 1 are returned as is.
double overfit_ratio(double train_ba, double test_ba);

}  // namespace censoring::stats
