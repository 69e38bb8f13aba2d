#pragma once

#include "censoring/nn/matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace censoring::synth {

/// Trials as rows of x. Array-shaped trials are stored channel-major, channels x samples per row.
struct TrialBatch {
    nn::Matrix x;
    std::vector<int> y;
    std::vector<int> s;
    std::size_t channels = 0;
    std::size_t samples = 1;
    int classes = 0;
    int nuisance = 0;

    std::size_t size() const noexcept { return y.size(); }

    /// Throws ShapeError / std::out_of_range when lengths or labels are inconsistent.
    void validate() const;

    TrialBatch subset(std::span<const std::size_t> indices) const;

    bool operator==(const TrialBatch&) const = default;
};

/// The nuisance label packs (subject, session) as subject * sessions + session.
inline int nuisance_label(int subject, int session, int sessions_per_subject) {
    return subject * sessions_per_subject + session;
}
inline int subject_of(int nuisance, int sessions_per_subject) { return nuisance / sessions_per_subject; }

TrialBatch concat(const TrialBatch& a, const TrialBatch& b);

}  // namespace censoring::synth
