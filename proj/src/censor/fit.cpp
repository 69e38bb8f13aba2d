#include "censoring/censor/fit.hpp"

#include "censoring/errors.hpp"

#include <numeric>

namespace censoring::censor {

CensorBatch PairedSample::batch(std::span<const std::size_t> indices, nn::RngStream& rng) const {
    CensorBatch b;
    b.z = nn::gather_rows(z, indices);
    std::vector<std::size_t> perm(indices.begin(), indices.end());
    rng.shuffle(std::span<std::size_t>(perm));
    if (!s.empty()) {
        for (std::size_t i : indices) b.s.push_back(s[i]);
        for (std::size_t i : perm) b.s_perm.push_back(s[i]);
    }
    if (!y.empty()) {
        for (std::size_t i : indices) b.y.push_back(y[i]);
    }
    if (!s_features.empty()) {
        b.s_features = nn::gather_rows(s_features, indices);
        b.s_perm_features = nn::gather_rows(s_features, perm);
    }
    return b;
}

std::vector<double> fit_censor(CensorModel& censor, const PairedSample& sample, const FitOptions& options,
                               nn::RngStream& rng) {
    if (options.batch_size < 2) throw ConfigError("fit_censor: batch size must be >= 2");
    nn::AdamW opt(options.optimizer);
    std::vector<std::size_t> order(sample.size());
    std::vector<double> history;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t count = std::min(options.batch_size, order.size() - start);
            if (count < 2) break;
            const auto batch = sample.batch(std::span(order).subspan(start, count), rng);
            censor.refresh_spectral_norm(1);
            censor.zero_grad();
            total += censor.accumulate_train_gradients(batch);
            auto params = censor.params("censor");
            opt.step(params);
            ++batches;
        }
        history.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    }
    return history;
}

namespace {

CensorBatch whole(const PairedSample& sample, nn::RngStream& rng) {
    std::vector<std::size_t> all(sample.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return sample.batch(all, rng);
}

}  // namespace

double evaluate_penalty(const CensorModel& censor, const PairedSample& sample, nn::RngStream& rng) {
    return censor.penalty_value(whole(sample, rng));
}

double evaluate_train_loss(const CensorModel& censor, const PairedSample& sample, nn::RngStream& rng) {
    return censor.train_loss(whole(sample, rng));
}

}  // namespace censoring::censor
