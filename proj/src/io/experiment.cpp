#include "censoring/io/experiment.hpp"

#include "censoring/errors.hpp"
#include "censoring/io/epoch_file.hpp"
#include "censoring/io/results_csv.hpp"
#include "censoring/stats/metrics.hpp"
#include "censoring/stats/probe.hpp"
#include "censoring/synth/generator.hpp"
#include "censoring/train/checkpoint_file.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace censoring::io {

namespace {

constexpr std::uint64_t kSpecStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kSubsampleStream = 2;

// Training nuisance values become 0..k-1 so the censor only models subjects it can see.
synth::TrialBatch densify_nuisance(synth::TrialBatch batch) {
    std::vector<int> values(batch.s);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (int& s : batch.s) {
        s = static_cast<int>(std::lower_bound(values.begin(), values.end(), s) - values.begin());
    }
    batch.nuisance = static_cast<int>(values.size());
    return batch;
}

nlohmann::json metadata(const ExperimentConfig& config, const Dataset& data) {
    nlohmann::json j;
    j["master_seed"] = config.master_seed;
    j["seeds"] = config.seeds;
    j["fold_scheme"] =
        "per fold id, subjects are shuffled uniformly by a stream derived from the master seed and the fold id, "
        "then the first train/val/test counts are taken; folds may overlap";
    j["quantile_rule"] = "linear interpolation between order statistics, h = (n - 1) p";
    j["control_rule"] = "one lambda = 0 run per (seed, fold, projection, eval point), shared by all grid cells";
    j["trials"] = data.batch.size();
    j["warnings"] = data.warnings;
    nlohmann::json folds = nlohmann::json::object();
    for (auto fold : config.folds) {
        const auto split = fold_split(config, data, fold);
        folds[std::to_string(fold)] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
    }
    j["folds"] = folds;
    return j;
}

}  // namespace

Dataset load_dataset(const DatasetSource& source) {
    Dataset data;
    if (!source.epoch_file.empty()) {
        data.batch = read_epoch_file(source.epoch_file);
        data.sessions_per_subject = source.sessions_per_subject;
    } else {
        synth::GenModelSpec spec;
        if (source.synthetic) {
            nn::RngStream spec_rng(source.data_seed, kSpecStream);
            spec = synth::make_spec(*source.synthetic, spec_rng);
            data.sessions_per_subject = source.synthetic->sessions_per_subject;
        } else if (source.explicit_spec) {
            spec = *source.explicit_spec;
            data.sessions_per_subject = source.sessions_per_subject;
        } else {
            throw ConfigError("dataset: no source given");
        }
        nn::RngStream sample_rng(source.data_seed, kSampleStream);
        const std::size_t n = source.trials_per_nuisance * static_cast<std::size_t>(spec.nuisance);
        data.batch = synth::generate(spec, n, sample_rng).batch;
    }
    if (source.nontarget_ratio > 0) {
        nn::RngStream rng(source.data_seed, kSubsampleStream);
        data.batch = synth::subsample_nontargets(data.batch, source.nontarget_ratio, rng, &data.warnings);
    }
    std::set<int> subjects;
    for (int s : data.batch.s) subjects.insert(synth::subject_of(s, data.sessions_per_subject));
    data.subjects.assign(subjects.begin(), subjects.end());
    return data;
}

std::vector<RunSpec> enumerate_runs(const ExperimentConfig& config) {
    std::vector<train::TrainConfig> cells;
    for (auto projection : config.grid.projections) {
        for (auto point : config.grid.eval_points) {
            train::TrainConfig control = config.base;
            control.lambda = 0.0;
            control.mode = censor::Mode::marginal;
            control.method = censor::Method::density_ratio;
            control.projection = projection;
            control.eval_point = point;
            cells.push_back(control);
            for (auto mode : config.grid.modes)
                for (auto method : config.grid.methods)
                    for (double lambda : config.grid.lambdas) {
                        train::TrainConfig c = control;
                        c.mode = mode;
                        c.method = method;
                        c.lambda = lambda;
                        cells.push_back(c);
                    }
        }
    }
    std::vector<RunSpec> runs;
    for (auto seed : config.seeds)
        for (auto fold : config.folds)
            for (const auto& cell : cells) {
                RunSpec spec{runs.size(), seed, fold, cell};
                spec.config.seed = seed;
                runs.push_back(spec);
            }
    return runs;
}

nn::RngStream run_root(std::uint64_t master_seed, std::uint64_t seed, std::uint64_t fold) {
    return nn::RngStream(master_seed, seed).derive(fold);
}

synth::SubjectSplit fold_split(const ExperimentConfig& config, const Dataset& data, std::uint64_t fold) {
    return synth::subject_split(data.subjects, config.train_subjects, config.val_subjects, config.test_subjects, fold,
                                nn::RngStream(config.master_seed, kSplitStream));
}

RunOutput execute_run(const ExperimentConfig& config, const Dataset& data, const RunSpec& spec, bool keep_checkpoint) {
    RunOutput out;
    auto& r = out.result;
    r.run_id = spec.run_id;
    r.seed = spec.seed;
    r.fold = static_cast<int>(spec.fold);
    r.mode = spec.config.mode;
    r.method = spec.config.method;
    r.lambda = spec.config.lambda;
    r.projection = spec.config.projection;
    r.eval_point = spec.config.eval_point;

    const int sessions = data.sessions_per_subject;
    const auto split = fold_split(config, data, spec.fold);
    const auto train_rows = synth::rows_for_subjects(data.batch, split.train, sessions);
    const auto test_rows = synth::rows_for_subjects(data.batch, split.test, sessions);
    const auto train_set = densify_nuisance(data.batch.subset(train_rows));
    const auto test_set = data.batch.subset(test_rows);
    out.shape = train::DataShape::of(train_set);
    std::optional<synth::TrialBatch> val_set;
    if (!split.val.empty()) val_set = data.batch.subset(synth::rows_for_subjects(data.batch, split.val, sessions));

    const nn::RngStream root = run_root(config.master_seed, spec.seed, spec.fold);
    const bool needs_val = spec.config.eval_point == train::EvalPoint::best_val;
    auto trained = train::train_run(spec.config, train_set, needs_val ? &*val_set : nullptr, root);
    r.epochs_trained = trained.checkpoint.epoch;
    if (trained.failed) {
        r.failed = true;
        out.diagnostic = fmt::format("run {} (seed {}, fold {}): {}", spec.run_id, spec.seed, spec.fold,
                                     trained.diagnostic);
        return out;
    }
    try {
        const auto& model = trained.checkpoint.task;
        r.train_ba = train::evaluate_balanced_accuracy(model, train_set);
        r.test_ba = train::evaluate_balanced_accuracy(model, test_set);
        if (val_set) r.val_ba = train::evaluate_balanced_accuracy(model, *val_set);
        r.overfit_ratio = stats::overfit_ratio(r.train_ba, r.test_ba);

        nn::Matrix z = model.project(model.encode(train_set.x));
        if (spec.config.mode == censor::Mode::complementary && spec.config.lambda > 0.0) {
            z = model::split_latent(z).z;
        }
        std::vector<int> subjects(train_set.size());
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            subjects[i] = synth::subject_of(data.batch.s[train_rows[i]], sessions);
        }
        auto probe_rng = root.derive(kProbeStream);
        r.probe_ba = stats::probe_subject_accuracy(z, subjects, probe_rng);
    } catch (const std::exception& e) {
        r.failed = true;
        out.diagnostic = fmt::format("run {} (seed {}, fold {}): {}", spec.run_id, spec.seed, spec.fold, e.what());
        return out;
    }
    if (keep_checkpoint) out.checkpoint = std::move(trained.checkpoint);
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, bool write_files) {
    config.validate();
    const Dataset data = load_dataset(config.dataset);
    for (auto fold : config.folds) fold_split(config, data, fold);
    const auto runs = enumerate_runs(config);

    std::ofstream csv;
    if (write_files) {
        std::filesystem::create_directories(config.output_dir);
        if (config.save_checkpoints) std::filesystem::create_directories(config.output_dir / "checkpoints");
        std::ofstream meta(config.output_dir / "metadata.json");
        meta << metadata(config, data).dump(2) << '\n';
        csv.open(config.output_dir / "results.csv", std::ios::trunc);
        if (!csv) throw ConfigError("cannot write " + (config.output_dir / "results.csv").string());
        csv << kResultsHeader << '\n' << std::flush;
    }

    ExperimentOutput out;
    std::vector<std::optional<RunOutput>> done(runs.size());
    std::size_t next_to_write = 0;
    std::mutex sink;
    std::atomic<std::size_t> next_job{0};

    auto worker = [&] {
        while (true) {
            const std::size_t i = next_job.fetch_add(1);
            if (i >= runs.size()) return;
            auto result = execute_run(config, data, runs[i], write_files && config.save_checkpoints);
            if (result.checkpoint) {
                train::write_checkpoint(config.output_dir / "checkpoints" / fmt::format("run_{}.cnsr", i),
                                        runs[i].config, *result.checkpoint, result.shape);
                result.checkpoint.reset();
            }
            std::lock_guard lock(sink);
            done[i] = std::move(result);
            while (next_to_write < runs.size() && done[next_to_write]) {
                const auto& finished = *done[next_to_write];
                if (write_files) csv << format_result_row(finished.result) << '\n' << std::flush;
                out.rows.push_back(finished.result);
                if (finished.result.failed) {
                    ++out.failures;
                    out.diagnostics.push_back(finished.diagnostic);
                }
                ++next_to_write;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(runs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

}  // namespace censoring::io
