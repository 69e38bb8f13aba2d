#pragma once

#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"
#include "censoring/synth/trial_batch.hpp"

#include <cstddef>
#include <vector>

namespace censoring::synth {

enum class Variant { A, B, C };

/// Fully explicit generative model.
///   A: s ~ p(S), y ~ p(Y),   z | y ~ N(mu_y, I), x = A_s z + delta_s + eps
///   B: as A but y ~ p(Y | S)
///   C: as A plus w | s ~ N(nu_s, I) and x = A z + B w + delta_s + eps
/// With samples > 1 every channel value is modulated by `waveform` and noise is drawn per sample.
struct GenModelSpec {
    Variant variant = Variant::A;
    int classes = 2;
    int nuisance = 1;
    std::size_t latent_dim = 1;
    std::size_t input_dim = 1;
    std::size_t samples = 1;

    std::vector<double> nuisance_prior;  ///< empty = uniform
    std::vector<double> label_prior;     ///< p(Y), variants A and C
    nn::Matrix label_given_nuisance;     ///< p(Y|S), nuisance x classes, variant B
    nn::Matrix class_means;              ///< classes x latent_dim
    std::vector<nn::Matrix> mixing;      ///< input_dim x latent_dim; one per s, or a single shared matrix
    nn::Matrix offsets;                  ///< nuisance x input_dim; empty = zero
    nn::Matrix w_means;                  ///< variant C: nuisance x w_dim
    nn::Matrix w_mixing;                 ///< variant C: input_dim x w_dim
    std::vector<double> waveform;        ///< length `samples`; ignored when samples == 1
    double noise_scale = 0.0;

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;
};

struct Generated {
    TrialBatch batch;
    nn::Matrix z_true;
    nn::Matrix w_true;  ///< empty unless variant C
};

Generated generate(const GenModelSpec& spec, std::size_t n, nn::RngStream& rng);

/// Knobs for building a random GenModelSpec with subject structure.
struct SynthParams {
    Variant variant = Variant::A;
    int classes = 2;
    int subjects = 10;
    int sessions_per_subject = 2;
    std::size_t latent_dim = 8;
    std::size_t input_dim = 8;
    std::size_t w_dim = 4;
    std::size_t samples = 1;
    double class_separation = 2.0;
    double mixing_scale = 0.5;
    double offset_scale = 1.0;
    double session_scale = 0.1;
    double noise_scale = 0.5;
    double w_separation = 6.0;
    std::vector<double> label_prior;  ///< empty = uniform
    /// Variant B: how strongly each subject's label distribution departs from uniform, in [0, 1).
    double label_skew = 0.5;
};

GenModelSpec make_spec(const SynthParams& params, nn::RngStream& rng);

/// Orthonormal columns from modified Gram-Schmidt; throws NumericError on rank deficiency.
nn::Matrix orthonormalize_columns(const nn::Matrix& m);

}  // namespace censoring::synth
