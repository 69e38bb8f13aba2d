#include "censoring/errors.hpp"
#include "censoring/io/config.hpp"
#include "censoring/io/epoch_file.hpp"
#include "censoring/io/experiment.hpp"
#include "censoring/io/report.hpp"
#include "censoring/io/results_csv.hpp"
#include "censoring/stats/probe.hpp"
#include "censoring/synth/generator.hpp"
#include "censoring/train/checkpoint_file.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace censoring;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPartialFailure = 2;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& out_override, int workers) {
    auto config = io::load_experiment_config(config_path);
    if (const char* env = std::getenv("CENSOR_OUTPUT_DIR"); env && *env) config.output_dir = env;
    if (!out_override.empty()) config.output_dir = out_override;
    if (workers > 0) config.workers = workers;
    const auto out = io::run_experiment(config);
    for (const auto& line : out.diagnostics) std::cerr << "failed: " << line << '\n';
    std::cout << fmt::format("{} runs, {} failed, results in {}\n", out.rows.size(), out.failures,
                             (config.output_dir / "results.csv").string());
    return out.failures == 0 ? kOk : kPartialFailure;
}

int cmd_report(const std::string& results, const std::string& out_dir) {
    const auto rows = io::read_results_csv(results);
    const auto report = io::emit_report(rows, out_dir);
    std::cout << "summary: " << report.summary_path.string() << '\n';
    for (const auto& fig : report.figures) std::cout << "figure: " << fig.path.string() << '\n';
    return kOk;
}

int cmd_make_synth(const std::string& spec_path, const std::string& out, long long trials) {
    const auto file = io::parse_synth_spec(slurp(spec_path));
    const auto spec = io::resolve_spec(file);
    nn::RngStream rng(file.seed, 1);
    const std::size_t n = trials > 0 ? static_cast<std::size_t>(trials) : file.trials;
    const auto generated = synth::generate(spec, n, rng);
    io::write_epoch_file(std::filesystem::path(out), generated.batch);
    std::cout << fmt::format("wrote {} trials ({} channels x {} samples) to {}\n", generated.batch.size(),
                             generated.batch.channels, generated.batch.samples, out);
    return kOk;
}

int cmd_probe(const std::string& checkpoint, const std::string& data_path, int sessions, std::uint64_t seed) {
    auto loaded = train::read_checkpoint(checkpoint);
    const auto data = io::read_epoch_file(std::filesystem::path(data_path));
    const auto& model = loaded.state.task;
    nn::Matrix z = model.project(model.encode(data.x));
    if (loaded.config.mode == censor::Mode::complementary && loaded.config.censored()) {
        z = model::split_latent(z).z;
    }
    std::vector<int> subjects(data.size());
    for (std::size_t i = 0; i < subjects.size(); ++i) subjects[i] = synth::subject_of(data.s[i], sessions);
    nn::RngStream rng(seed, io::kProbeStream);
    const double ba = stats::probe_subject_accuracy(z, subjects, rng);
    const double task_ba = train::evaluate_balanced_accuracy(model, data);
    std::cout << fmt::format("subject probe balanced accuracy: {}\ntask balanced accuracy: {}\n", ba, task_ba);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Censoring regularization toolkit for subject-transfer classification"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    int workers = 0;
    auto* run = app.add_subcommand("run", "Run a cross-validated sweep from a JSON config");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_override, "Output directory (overrides config and CENSOR_OUTPUT_DIR)");
    run->add_option("--workers", workers, "Parallel runs");

    std::string results, report_out;
    auto* report = app.add_subcommand("report", "Summarize a results CSV into summary.csv and SVG boxplots");
    report->add_option("--results", results, "results.csv from a sweep")->required();
    report->add_option("--out", report_out, "Output directory")->required();

    std::string spec_path, synth_out;
    long long trials = 0;
    auto* make_synth = app.add_subcommand("make-synth", "Sample a synthetic dataset into an epoch file");
    make_synth->add_option("--spec", spec_path, "Synthetic dataset description (JSON)")->required();
    make_synth->add_option("--out", synth_out, "Epoch file to write")->required();
    make_synth->add_option("--trials", trials, "Override the trial count");

    std::string checkpoint, data_path;
    int sessions = 1;
    std::uint64_t probe_seed = 0;
    auto* probe = app.add_subcommand("probe", "Subject probe on a checkpoint's representation");
    probe->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    probe->add_option("--data", data_path, "Epoch file")->required();
    probe->add_option("--sessions", sessions, "Sessions per subject in the nuisance labels");
    probe->add_option("--seed", probe_seed, "Probe split seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(config_path, out_override, workers);
        if (*report) return cmd_report(results, report_out);
        if (*make_synth) return cmd_make_synth(spec_path, synth_out, trials);
        if (*probe) return cmd_probe(checkpoint, data_path, sessions, probe_seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}
