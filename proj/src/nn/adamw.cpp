#include "censoring/nn/adamw.hpp"

#include "censoring/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace censoring::nn {

AdamW::AdamW(AdamWConfig config) : config_(config) {
    if (!(config_.lr > 0.0)) throw ConfigError("AdamW: learning rate must be > 0");
    if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
        throw ConfigError("AdamW: betas must lie in [0, 1)");
    }
    if (config_.weight_decay < 0.0) throw ConfigError("AdamW: weight decay must be >= 0");
}

void AdamW::step(std::span<const ParamRef> params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].values.size(), 0.0);
            v_[i].assign(params[i].values.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw ShapeError("AdamW::step: optimizer tracks " + std::to_string(m_.size()) + " blocks, got " +
                         std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].values.size() != m_[i].size() || params[i].grads.size() != m_[i].size()) {
            throw ShapeError("AdamW::step: block '" + params[i].name + "' has " +
                             std::to_string(params[i].values.size()) + " values, moments have " +
                             std::to_string(m_[i].size()));
        }
    }

    ++step_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    const double decay = 1.0 - config_.lr * config_.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].values;
        auto g = params[i].grads;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            w[j] = w[j] * decay - config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

}  // namespace censoring::nn
