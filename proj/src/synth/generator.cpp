#include "censoring/synth/generator.hpp"

#include "censoring/errors.hpp"
#include "censoring/nn/layers.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace censoring::synth {

using nn::Matrix;
using nn::RngStream;

namespace {

void check_distribution(std::span<const double> p, const std::string& what) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw ConfigError(what + ": negative or non-finite probability");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(what + ": probabilities sum to " + std::to_string(total));
}

int sample_categorical(std::span<const double> p, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        acc += p[k];
        if (u < acc) return static_cast<int>(k);
    }
    // Rounding left u above the final partial sum; pick the last class with mass.
    for (std::size_t k = p.size(); k-- > 0;) {
        if (p[k] > 0.0) return static_cast<int>(k);
    }
    return 0;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, RngStream& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = scale * rng.normal();
    return m;
}

Matrix identity_plus(std::size_t n, double scale, RngStream& rng) {
    Matrix m = gaussian_matrix(n, n, scale, rng);
    for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
    return m;
}

std::vector<double> random_simplex_point(std::size_t n, RngStream& rng) {
    std::vector<double> p(n);
    double total = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - rng.uniform());
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

void GenModelSpec::validate() const {
    if (classes < 1) throw ConfigError("GenModelSpec: classes must be >= 1");
    if (nuisance < 1) throw ConfigError("GenModelSpec: nuisance count must be >= 1");
    if (latent_dim == 0 || input_dim == 0) throw ConfigError("GenModelSpec: dimensions must be positive");
    if (samples == 0) throw ConfigError("GenModelSpec: samples must be >= 1");
    if (input_dim < latent_dim) throw ConfigError("GenModelSpec: input_dim must be >= latent_dim");
    if (!(noise_scale >= 0.0)) throw ConfigError("GenModelSpec: noise scale must be >= 0");

    const auto c = static_cast<std::size_t>(classes);
    const auto s = static_cast<std::size_t>(nuisance);
    if (!nuisance_prior.empty()) {
        if (nuisance_prior.size() != s) throw ConfigError("GenModelSpec: nuisance prior length mismatch");
        check_distribution(nuisance_prior, "p(S)");
    }
    if (variant == Variant::B) {
        if (label_given_nuisance.rows() != s || label_given_nuisance.cols() != c) {
            throw ConfigError("GenModelSpec: p(Y|S) must be nuisance x classes, got " +
                              label_given_nuisance.shape_string());
        }
        for (std::size_t r = 0; r < s; ++r) {
            check_distribution(label_given_nuisance.row(r), "p(Y|S=" + std::to_string(r) + ")");
        }
    } else {
        if (label_prior.size() != c) throw ConfigError("GenModelSpec: label prior length mismatch");
        check_distribution(label_prior, "p(Y)");
    }
    if (class_means.rows() != c || class_means.cols() != latent_dim) {
        throw ConfigError("GenModelSpec: class means must be classes x latent_dim, got " +
                          class_means.shape_string());
    }
    if (mixing.size() != 1 && mixing.size() != s) {
        throw ConfigError("GenModelSpec: need one shared mixing matrix or one per nuisance value");
    }
    for (const auto& a : mixing) {
        if (a.rows() != input_dim || a.cols() != latent_dim) {
            throw ConfigError("GenModelSpec: mixing matrix must be input_dim x latent_dim, got " + a.shape_string());
        }
        try {
            (void)orthonormalize_columns(a);
        } catch (const NumericError&) {
            throw ConfigError("GenModelSpec: mixing matrix does not have full column rank");
        }
    }
    if (!offsets.empty() && (offsets.rows() != s || offsets.cols() != input_dim)) {
        throw ConfigError("GenModelSpec: offsets must be nuisance x input_dim, got " + offsets.shape_string());
    }
    if (variant == Variant::C) {
        if (w_means.rows() != s || w_means.cols() == 0) throw ConfigError("GenModelSpec: w means must be nuisance x w_dim");
        if (w_mixing.rows() != input_dim || w_mixing.cols() != w_means.cols()) {
            throw ConfigError("GenModelSpec: w mixing must be input_dim x w_dim, got " + w_mixing.shape_string());
        }
    }
    if (samples > 1 && waveform.size() != samples) throw ConfigError("GenModelSpec: waveform length must equal samples");
}

Generated generate(const GenModelSpec& spec, std::size_t n, RngStream& rng) {
    spec.validate();
    if (n == 0) throw ConfigError("generate: n must be >= 1");

    const std::size_t k = spec.latent_dim;
    const std::size_t d = spec.input_dim;
    const std::size_t t = spec.samples;
    const std::size_t wd = spec.variant == Variant::C ? spec.w_means.cols() : 0;
    std::vector<double> uniform_s(static_cast<std::size_t>(spec.nuisance), 1.0 / spec.nuisance);
    std::span<const double> p_s = spec.nuisance_prior.empty() ? std::span<const double>(uniform_s)
                                                               : std::span<const double>(spec.nuisance_prior);

    Generated out;
    out.batch.x = Matrix(n, d * t);
    out.batch.y.resize(n);
    out.batch.s.resize(n);
    out.batch.channels = d;
    out.batch.samples = t;
    out.batch.classes = spec.classes;
    out.batch.nuisance = spec.nuisance;
    out.z_true = Matrix(n, k);
    if (wd > 0) out.w_true = Matrix(n, wd);

    std::vector<double> clean(d);
    for (std::size_t i = 0; i < n; ++i) {
        const int s = sample_categorical(p_s, rng);
        const auto su = static_cast<std::size_t>(s);
        const int y = spec.variant == Variant::B ? sample_categorical(spec.label_given_nuisance.row(su), rng)
                                                 : sample_categorical(spec.label_prior, rng);
        out.batch.s[i] = s;
        out.batch.y[i] = y;

        auto z = out.z_true.row(i);
        for (std::size_t j = 0; j < k; ++j) z[j] = spec.class_means(static_cast<std::size_t>(y), j) + rng.normal();

        const Matrix& a = spec.mixing.size() == 1 ? spec.mixing[0] : spec.mixing[su];
        for (std::size_t r = 0; r < d; ++r) {
            double acc = spec.offsets.empty() ? 0.0 : spec.offsets(su, r);
            for (std::size_t j = 0; j < k; ++j) acc += a(r, j) * z[j];
            clean[r] = acc;
        }
        if (wd > 0) {
            auto w = out.w_true.row(i);
            for (std::size_t j = 0; j < wd; ++j) w[j] = spec.w_means(su, j) + rng.normal();
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t j = 0; j < wd; ++j) clean[r] += spec.w_mixing(r, j) * w[j];
            }
        }

        auto x = out.batch.x.row(i);
        if (t == 1) {
            for (std::size_t r = 0; r < d; ++r) x[r] = clean[r] + (spec.noise_scale > 0.0 ? spec.noise_scale * rng.normal() : 0.0);
        } else {
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t u = 0; u < t; ++u) {
                    const double eps = spec.noise_scale > 0.0 ? spec.noise_scale * rng.normal() : 0.0;
                    x[r * t + u] = clean[r] * spec.waveform[u] + eps;
                }
            }
        }
    }
    return out;
}

Matrix orthonormalize_columns(const Matrix& m) {
    Matrix q = m;
    for (std::size_t c = 0; c < q.cols(); ++c) {
        for (std::size_t p = 0; p < c; ++p) {
            double dot = 0.0;
            for (std::size_t r = 0; r < q.rows(); ++r) dot += q(r, p) * q(r, c);
            for (std::size_t r = 0; r < q.rows(); ++r) q(r, c) -= dot * q(r, p);
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < q.rows(); ++r) norm += q(r, c) * q(r, c);
        norm = std::sqrt(norm);
        if (norm < 1e-10) throw NumericError("orthonormalize_columns: column " + std::to_string(c) + " is dependent");
        for (std::size_t r = 0; r < q.rows(); ++r) q(r, c) /= norm;
    }
    return q;
}

GenModelSpec make_spec(const SynthParams& p, RngStream& rng) {
    if (p.subjects < 1 || p.sessions_per_subject < 1) throw ConfigError("make_spec: need >= 1 subject and session");
    if (p.classes < 1) throw ConfigError("make_spec: classes must be >= 1");
    if (p.input_dim < p.latent_dim) throw ConfigError("make_spec: input_dim must be >= latent_dim");
    if (p.variant == Variant::C && p.input_dim < p.latent_dim + p.w_dim) {
        throw ConfigError("make_spec: variant C needs input_dim >= latent_dim + w_dim");
    }
    if (p.label_skew < 0.0 || p.label_skew >= 1.0) throw ConfigError("make_spec: label_skew must lie in [0, 1)");

    const auto c = static_cast<std::size_t>(p.classes);
    const int sessions = p.sessions_per_subject;
    const auto s_count = static_cast<std::size_t>(p.subjects * sessions);
    const std::size_t d = p.input_dim;

    GenModelSpec spec;
    spec.variant = p.variant;
    spec.classes = p.classes;
    spec.nuisance = static_cast<int>(s_count);
    spec.latent_dim = p.latent_dim;
    spec.input_dim = d;
    spec.samples = p.samples;
    spec.noise_scale = p.noise_scale;
    spec.label_prior = p.label_prior.empty() ? std::vector<double>(c, 1.0 / static_cast<double>(c)) : p.label_prior;

    RngStream means_rng = rng.derive(1);
    spec.class_means = Matrix(c, p.latent_dim);
    if (c == 2) {
        const auto u = nn::random_unit_vector(p.latent_dim, means_rng);
        for (std::size_t j = 0; j < p.latent_dim; ++j) {
            spec.class_means(0, j) = -0.5 * p.class_separation * u[j];
            spec.class_means(1, j) = 0.5 * p.class_separation * u[j];
        }
    } else {
        for (std::size_t y = 0; y < c; ++y) {
            const auto u = nn::random_unit_vector(p.latent_dim, means_rng);
            for (std::size_t j = 0; j < p.latent_dim; ++j) {
                spec.class_means(y, j) = p.class_separation / std::numbers::sqrt2 * u[j];
            }
        }
    }

    RngStream subject_rng = rng.derive(2);
    if (p.variant == Variant::C) {
        const Matrix q = orthonormalize_columns(identity_plus(d, p.mixing_scale, subject_rng));
        spec.mixing = {nn::column_slice(q, 0, p.latent_dim)};
        spec.w_mixing = nn::column_slice(q, p.latent_dim, p.w_dim);
        spec.w_means = Matrix(s_count, p.w_dim);
        for (std::size_t s = 0; s < s_count; ++s) {
            for (std::size_t j = 0; j < p.w_dim; ++j) spec.w_means(s, j) = p.w_separation * subject_rng.normal();
        }
    } else {
        spec.offsets = Matrix(s_count, d);
        spec.mixing.reserve(s_count);
        for (int subj = 0; subj < p.subjects; ++subj) {
            const Matrix base = identity_plus(d, p.mixing_scale, subject_rng);
            std::vector<double> delta(d);
            for (double& v : delta) v = p.offset_scale * subject_rng.normal();
            for (int sess = 0; sess < sessions; ++sess) {
                Matrix perturbed = base;
                for (double& v : perturbed.data()) v += p.session_scale * subject_rng.normal();
                spec.mixing.push_back(nn::column_slice(orthonormalize_columns(perturbed), 0, p.latent_dim));
                const auto s = static_cast<std::size_t>(nuisance_label(subj, sess, sessions));
                for (std::size_t r = 0; r < d; ++r) spec.offsets(s, r) = delta[r] + p.session_scale * subject_rng.normal();
            }
        }
    }

    if (p.variant == Variant::B) {
        RngStream label_rng = rng.derive(3);
        spec.label_given_nuisance = Matrix(s_count, c);
        for (int subj = 0; subj < p.subjects; ++subj) {
            const auto skewed = random_simplex_point(c, label_rng);
            for (int sess = 0; sess < sessions; ++sess) {
                const auto s = static_cast<std::size_t>(nuisance_label(subj, sess, sessions));
                for (std::size_t y = 0; y < c; ++y) {
                    spec.label_given_nuisance(s, y) = (1.0 - p.label_skew) * spec.label_prior[y] + p.label_skew * skewed[y];
                }
            }
        }
    }

    if (p.samples > 1) {
        spec.waveform.resize(p.samples);
        for (std::size_t u = 0; u < p.samples; ++u) {
            spec.waveform[u] = std::sin(std::numbers::pi * (static_cast<double>(u) + 0.5) / static_cast<double>(p.samples));
        }
    }
    spec.validate();
    return spec;
}

}  // namespace censoring::synth
