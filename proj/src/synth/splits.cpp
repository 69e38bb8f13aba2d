#include "censoring/synth/splits.hpp"

#include "censoring/errors.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace censoring::synth {

Subsampled subsample_nontarget_indices(const TrialBatch& batch, int ratio, nn::RngStream& rng) {
    if (batch.classes != 2) throw ConfigError("subsample_nontargets: requires binary labels");
    if (ratio < 1) throw ConfigError("subsample_nontargets: ratio must be >= 1");

    std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto& g = groups[batch.s[i]];
        (batch.y[i] == 1 ? g.first : g.second).push_back(i);
    }

    Subsampled out;
    for (auto& [s, g] : groups) {
        auto& [targets, nontargets] = g;
        const std::size_t wanted = targets.size() * static_cast<std::size_t>(ratio);
        rng.shuffle(std::span<std::size_t>(nontargets));
        if (nontargets.size() < wanted) {
            out.warnings.push_back("nuisance " + std::to_string(s) + ": " + std::to_string(nontargets.size()) +
                                   " non-targets available, " + std::to_string(wanted) + " requested; keeping all");
        }
        const std::size_t keep = std::min(wanted, nontargets.size());
        out.indices.insert(out.indices.end(), targets.begin(), targets.end());
        out.indices.insert(out.indices.end(), nontargets.begin(), nontargets.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    rng.shuffle(std::span<std::size_t>(out.indices));
    return out;
}

TrialBatch subsample_nontargets(const TrialBatch& batch, int ratio, nn::RngStream& rng,
                                std::vector<std::string>* warnings) {
    auto picked = subsample_nontarget_indices(batch, ratio, rng);
    if (warnings) warnings->insert(warnings->end(), picked.warnings.begin(), picked.warnings.end());
    return batch.subset(picked.indices);
}

SubjectSplit subject_split(std::vector<int> subjects, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                           std::uint64_t fold_id, const nn::RngStream& rng) {
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    if (n_train + n_val + n_test > subjects.size()) {
        throw ConfigError("subject_split: " + std::to_string(n_train + n_val + n_test) + " subjects requested, " +
                          std::to_string(subjects.size()) + " available");
    }
    auto fold_rng = rng.derive(fold_id);
    fold_rng.shuffle(std::span<int>(subjects));

    SubjectSplit out;
    auto it = subjects.begin();
    auto take = [&it](std::size_t count, std::vector<int>& dst) {
        dst.assign(it, it + static_cast<std::ptrdiff_t>(count));
        std::sort(dst.begin(), dst.end());
        it += static_cast<std::ptrdiff_t>(count);
    };
    take(n_train, out.train);
    take(n_val, out.val);
    take(n_test, out.test);
    return out;
}

std::vector<std::size_t> rows_for_subjects(const TrialBatch& batch, const std::vector<int>& subjects,
                                           int sessions_per_subject) {
    const std::set<int> wanted(subjects.begin(), subjects.end());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (wanted.contains(subject_of(batch.s[i], sessions_per_subject))) rows.push_back(i);
    }
    return rows;
}

}  // namespace censoring::synth
