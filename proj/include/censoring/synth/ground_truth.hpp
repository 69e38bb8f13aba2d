#pragma once

#include "censoring/nn/matrix.hpp"
#include "censoring/nn/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace censoring::synth {

struct GaussianPair {
    std::vector<double> a;
    std::vector<double> b;
};

/// Standard bivariate normal with correlation rho; |rho| < 1.
GaussianPair gaussian_pair(double rho, std::size_t n, nn::RngStream& rng);

/// -0.5 ln(1 - rho^2) nats.
double closed_form_gaussian_mi(double rho);

/// Mutual information (nats) of a joint probability table, 0 ln 0 = 0.
double exact_discrete_mi(const nn::Matrix& joint);

double entropy(std::span<const double> probabilities);

/// Finite discrete measure: one support point per row of `points`.
struct DiscreteMeasure {
    nn::Matrix points;
    std::vector<double> masses;
};

/// Exact W1 under the L1 ground metric, by min-cost flow on the transport polytope.
double brute_force_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// W1 between two equal-size 1-D samples via the sorted coupling.
double sorted_sample_w1(std::span<const double> a, std::span<const double> b);

}  // namespace censoring::synth
