#include "censoring/synth/trial_batch.hpp"

#include "censoring/errors.hpp"

#include <stdexcept>
#include <string>

namespace censoring::synth {

void TrialBatch::validate() const {
    if (x.rows() != y.size() || y.size() != s.size()) {
        throw ShapeError("TrialBatch: x has " + std::to_string(x.rows()) + " rows, y " + std::to_string(y.size()) +
                         ", s " + std::to_string(s.size()));
    }
    if (channels * samples != x.cols()) {
        throw ShapeError("TrialBatch: " + std::to_string(channels) + " channels x " + std::to_string(samples) +
                         " samples does not match x " + x.shape_string());
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= classes) {
            throw std::out_of_range("TrialBatch: y[" + std::to_string(i) + "] = " + std::to_string(y[i]) +
                                    " outside [0, " + std::to_string(classes) + ")");
        }
        if (s[i] < 0 || s[i] >= nuisance) {
            throw std::out_of_range("TrialBatch: s[" + std::to_string(i) + "] = " + std::to_string(s[i]) +
                                    " outside [0, " + std::to_string(nuisance) + ")");
        }
    }
}

TrialBatch TrialBatch::subset(std::span<const std::size_t> indices) const {
    TrialBatch out;
    out.x = nn::gather_rows(x, indices);
    out.y.reserve(indices.size());
    out.s.reserve(indices.size());
    for (std::size_t i : indices) {
        out.y.push_back(y.at(i));
        out.s.push_back(s.at(i));
    }
    out.channels = channels;
    out.samples = samples;
    out.classes = classes;
    out.nuisance = nuisance;
    return out;
}

TrialBatch concat(const TrialBatch& a, const TrialBatch& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    if (a.channels != b.channels || a.samples != b.samples) throw ShapeError("concat: trial shapes differ");
    TrialBatch out = a;
    out.x = nn::vconcat(a.x, b.x);
    out.y.insert(out.y.end(), b.y.begin(), b.y.end());
    out.s.insert(out.s.end(), b.s.begin(), b.s.end());
    out.classes = std::max(a.classes, b.classes);
    out.nuisance = std::max(a.nuisance, b.nuisance);
    return out;
}

}  // namespace censoring::synth
