#pragma once

#include "censoring/nn/rng.hpp"
#include "censoring/synth/trial_batch.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace censoring::synth {

struct Subsampled {
    std::vector<std::size_t> indices;  ///< rows kept, in shuffled order
    std::vector<std::string> warnings;
};

/// Keeps every target (y == 1) and at most ratio non-targets per target within each nuisance value.
Subsampled subsample_nontarget_indices(const TrialBatch& batch, int ratio, nn::RngStream& rng);
TrialBatch subsample_nontargets(const TrialBatch& batch, int ratio, nn::RngStream& rng,
                                std::vector<std::string>* warnings = nullptr);

struct SubjectSplit {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

/// Disjoint subject sets, each sorted. Depends only on (rng identity, fold_id).
SubjectSplit subject_split(std::vector<int> subjects, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                           std::uint64_t fold_id, const nn::RngStream& rng);

/// Rows whose subject (nuisance / sessions_per_subject) is in `subjects`.
std::vector<std::size_t> rows_for_subjects(const TrialBatch& batch, const std::vector<int>& subjects,
                                           int sessions_per_subject);

}  // namespace censoring::synth
