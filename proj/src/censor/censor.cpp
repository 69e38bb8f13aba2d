#include "censoring/censor/censor.hpp"

#include "censoring/errors.hpp"
#include "censoring/nn/loss.hpp"

#include <string>

namespace censoring::censor {

using nn::Matrix;

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::marginal: return "marginal";
        case Mode::conditional: return "conditional";
        case Mode::complementary: return "complementary";
    }
    return "?";
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::adversarial: return "adversarial";
        case Method::density_ratio: return "dre";
        case Method::wasserstein: return "wasserstein";
    }
    return "?";
}

Mode parse_mode(std::string_view text) {
    if (text == "marginal") return Mode::marginal;
    if (text == "conditional") return Mode::conditional;
    if (text == "complementary") return Mode::complementary;
    throw ConfigError("unknown censor mode '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
    if (text == "adversarial" || text == "adv") return Method::adversarial;
    if (text == "dre" || text == "density-ratio" || text == "density_ratio") return Method::density_ratio;
    if (text == "wasserstein" || text == "w1") return Method::wasserstein;
    throw ConfigError("unknown censor method '" + std::string(text) + "'");
}

std::size_t CensorSpec::input_dim() const {
    std::size_t dim = feature_dim;
    if (method != Method::adversarial) {
        dim += nuisance_features > 0 ? nuisance_features : static_cast<std::size_t>(nuisance);
    }
    if (mode == Mode::conditional) dim += static_cast<std::size_t>(classes);
    return dim;
}

std::size_t CensorSpec::output_dim() const {
    return method == Method::adversarial ? static_cast<std::size_t>(nuisance) : 1;
}

void CensorSpec::validate() const {
    if (feature_dim == 0) throw ConfigError("CensorSpec: feature_dim must be >= 1");
    if (nuisance_features > 0 && method == Method::adversarial) {
        throw ConfigError("CensorSpec: the adversarial censor predicts discrete nuisance labels");
    }
    if (nuisance_features == 0 && nuisance < 2) throw ConfigError("CensorSpec: need at least 2 nuisance values");
    if (mode == Mode::conditional && classes < 1) throw ConfigError("CensorSpec: conditional mode needs the class count");
    if (power_iterations < 1) throw ConfigError("CensorSpec: power_iterations must be >= 1");
}

std::vector<int> permute_nuisance(std::span<const int> s, nn::RngStream& rng) {
    if (s.size() < 2) throw ConfigError("permute_nuisance: a batch of size < 2 has no product-of-marginals sample");
    std::vector<int> out(s.begin(), s.end());
    rng.shuffle(std::span<int>(out));
    return out;
}

CensorModel::CensorModel(CensorSpec spec, nn::RngStream& init_rng) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t in = spec_.input_dim();
    for (std::size_t h : spec_.hidden) {
        net_.add(nn::DenseLayer(in, h, spec_.activation, init_rng));
        in = h;
    }
    net_.add(nn::DenseLayer(in, spec_.output_dim(), nn::Activation::identity, init_rng));
    if (spec_.method == Method::wasserstein) net_.enable_spectral_norm(init_rng, spec_.power_iterations);
}

CensorModel::CensorModel(CensorSpec spec, nn::Sequential net) : spec_(std::move(spec)), net_(std::move(net)) {
    spec_.validate();
    if (net_.in_dim() != spec_.input_dim() || net_.out_dim() != spec_.output_dim()) {
        throw ShapeError("CensorModel: network maps " + std::to_string(net_.in_dim()) + " -> " +
                         std::to_string(net_.out_dim()) + ", spec needs " + std::to_string(spec_.input_dim()) + " -> " +
                         std::to_string(spec_.output_dim()));
    }
}

void CensorModel::check_batch(const CensorBatch& batch, bool needs_perm) const {
    const std::size_t n = batch.z.rows();
    if (batch.z.cols() != spec_.feature_dim) {
        throw ShapeError("censor: features " + batch.z.shape_string() + " but T = " + std::to_string(spec_.feature_dim));
    }
    if (n == 0) throw ShapeError("censor: empty batch");
    if (spec_.nuisance_features > 0) {
        if (batch.s_features.rows() != n || batch.s_features.cols() != spec_.nuisance_features) {
            throw ShapeError("censor: nuisance features " + batch.s_features.shape_string() + " do not match the batch");
        }
        if (needs_perm && (batch.s_perm_features.rows() != n || batch.s_perm_features.cols() != spec_.nuisance_features)) {
            throw ConfigError("censor: permuted nuisance features are required by " + std::string(to_string(spec_.method)));
        }
    } else {
        if (batch.s.size() != n) throw ShapeError("censor: nuisance labels do not match the batch");
        if (needs_perm && batch.s_perm.size() != n) {
            throw ConfigError("censor: permuted nuisance labels are required by " + std::string(to_string(spec_.method)));
        }
    }
    if (spec_.mode == Mode::conditional && batch.y.size() != n) {
        throw ConfigError("censor: conditional mode requires task labels at the censor input");
    }
    if (spec_.method == Method::wasserstein) {
        for (const auto& layer : net_.layers()) {
            const auto* dense = std::get_if<nn::DenseLayer>(&layer);
            if (dense && !dense->spectral_norm_enabled()) {
                throw ConfigError("censor: Wasserstein critic layer lacks spectral normalization state");
            }
        }
    }
}

Matrix CensorModel::input(const CensorBatch& batch, bool permuted) const {
    std::vector<Matrix> parts;
    parts.push_back(batch.z);
    if (spec_.method != Method::adversarial) {
        if (spec_.nuisance_features > 0) {
            parts.push_back(permuted ? batch.s_perm_features : batch.s_features);
        } else {
            parts.push_back(nn::one_hot(permuted ? batch.s_perm : batch.s, static_cast<std::size_t>(spec_.nuisance)));
        }
    }
    if (spec_.mode == Mode::conditional) parts.push_back(nn::one_hot(batch.y, static_cast<std::size_t>(spec_.classes)));
    return parts.size() == 1 ? parts.front() : nn::hconcat(parts);
}

Matrix CensorModel::stacked_input(const CensorBatch& batch) const {
    return nn::vconcat(input(batch, false), input(batch, true));
}

namespace {

// Column vector of J outputs for joint rows (first n) and product rows (last n).
double mean_rows(const Matrix& m, std::size_t first, std::size_t count) {
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += m(first + i, 0);
    return acc / static_cast<double>(count);
}

Matrix feature_columns(const Matrix& grad_input, std::size_t feature_dim) {
    return nn::column_slice(grad_input, 0, feature_dim);
}

}  // namespace

double CensorModel::penalty_value(const CensorBatch& batch) const {
    const std::size_t n = batch.z.rows();
    switch (spec_.method) {
        case Method::adversarial:
            check_batch(batch, false);
            return -nn::softmax_cross_entropy(net_.infer(input(batch, false)), batch.s).loss;
        case Method::density_ratio:
            check_batch(batch, false);
            return mean_rows(net_.infer(input(batch, false)), 0, n);
        case Method::wasserstein: {
            check_batch(batch, true);
            const Matrix out = net_.infer(stacked_input(batch));
            return mean_rows(out, 0, n) - mean_rows(out, n, n);
        }
    }
    return 0.0;
}

Penalty CensorModel::penalty(const CensorBatch& batch) {
    const std::size_t n = batch.z.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    Penalty out;
    switch (spec_.method) {
        case Method::adversarial: {
            check_batch(batch, false);
            auto ce = nn::softmax_cross_entropy(net_.forward(input(batch, false)), batch.s);
            nn::scale_in_place(ce.grad, -1.0);
            out.value = -ce.loss;
            out.grad_z = feature_columns(net_.backward(ce.grad), spec_.feature_dim);
            break;
        }
        case Method::density_ratio: {
            check_batch(batch, false);
            const Matrix j = net_.forward(input(batch, false));
            out.value = mean_rows(j, 0, n);
            out.grad_z = feature_columns(net_.backward(Matrix(n, 1, inv_n)), spec_.feature_dim);
            break;
        }
        case Method::wasserstein: {
            check_batch(batch, true);
            const Matrix j = net_.forward(stacked_input(batch));
            out.value = mean_rows(j, 0, n) - mean_rows(j, n, n);
            Matrix upstream(2 * n, 1, inv_n);
            for (std::size_t i = n; i < 2 * n; ++i) upstream(i, 0) = -inv_n;
            const Matrix g = net_.backward(upstream);
            out.grad_z = feature_columns(nn::row_slice(g, 0, n), spec_.feature_dim);
            nn::add_in_place(out.grad_z, feature_columns(nn::row_slice(g, n, n), spec_.feature_dim));
            break;
        }
    }
    net_.zero_grad();
    return out;
}

double CensorModel::train_loss(const CensorBatch& batch) const {
    const std::size_t n = batch.z.rows();
    switch (spec_.method) {
        case Method::adversarial:
            check_batch(batch, false);
            return nn::softmax_cross_entropy(net_.infer(input(batch, false)), batch.s).loss;
        case Method::density_ratio: {
            check_batch(batch, true);
            std::vector<double> signs(2 * n, 1.0);
            std::fill(signs.begin() + static_cast<std::ptrdiff_t>(n), signs.end(), -1.0);
            return 2.0 * nn::logistic_terms(net_.infer(stacked_input(batch)), signs).loss;
        }
        case Method::wasserstein:
            return -penalty_value(batch);
    }
    return 0.0;
}

double CensorModel::accumulate_train_gradients(const CensorBatch& batch) {
    const std::size_t n = batch.z.rows();
    switch (spec_.method) {
        case Method::adversarial: {
            check_batch(batch, false);
            auto ce = nn::softmax_cross_entropy(net_.forward(input(batch, false)), batch.s);
            net_.backward(ce.grad);
            return ce.loss;
        }
        case Method::density_ratio: {
            check_batch(batch, true);
            std::vector<double> signs(2 * n, 1.0);
            std::fill(signs.begin() + static_cast<std::ptrdiff_t>(n), signs.end(), -1.0);
            auto terms = nn::logistic_terms(net_.forward(stacked_input(batch)), signs);
            nn::scale_in_place(terms.grad, 2.0);
            net_.backward(terms.grad);
            return 2.0 * terms.loss;
        }
        case Method::wasserstein: {
            check_batch(batch, true);
            const Matrix j = net_.forward(stacked_input(batch));
            const double inv_n = 1.0 / static_cast<double>(n);
            Matrix upstream(2 * n, 1, -inv_n);
            for (std::size_t i = n; i < 2 * n; ++i) upstream(i, 0) = inv_n;
            net_.backward(upstream);
            return mean_rows(j, n, n) - mean_rows(j, 0, n);
        }
    }
    return 0.0;
}

void CensorModel::refresh_spectral_norm(int iterations) {
    if (spec_.method == Method::wasserstein) net_.refresh_spectral_norm(iterations);
}

namespace {

void require(const CensorModel& censor, Method method, const char* who) {
    if (censor.method() != method) {
        throw ConfigError(std::string(who) + ": censor uses method '" + std::string(to_string(censor.method())) + "'");
    }
}

}  // namespace

double adv_censor_penalty(const CensorModel& censor, const CensorBatch& batch) {
    require(censor, Method::adversarial, "adv_censor_penalty");
    return censor.penalty_value(batch);
}

double adv_censor_train_loss(const CensorModel& censor, const CensorBatch& batch) {
    require(censor, Method::adversarial, "adv_censor_train_loss");
    return censor.train_loss(batch);
}

double dre_train_loss(const CensorModel& censor, const CensorBatch& batch) {
    require(censor, Method::density_ratio, "dre_train_loss");
    return censor.train_loss(batch);
}

double dre_censor_penalty(const CensorModel& censor, const CensorBatch& batch) {
    require(censor, Method::density_ratio, "dre_censor_penalty");
    return censor.penalty_value(batch);
}

double wasserstein_censor_penalty(const CensorModel& censor, const CensorBatch& batch) {
    require(censor, Method::wasserstein, "wasserstein_censor_penalty");
    return censor.penalty_value(batch);
}

double complementary_combine(Mode mode, double penalty_z, double penalty_w) {
    if (mode != Mode::complementary) throw ConfigError("complementary_combine: mode is not complementary");
    return penalty_z - penalty_w;
}

}  // namespace censoring::censor
