#include <doctest.h>

#include "censoring/errors.hpp"
#include "censoring/io/config.hpp"
#include "censoring/io/epoch_file.hpp"
#include "censoring/io/experiment.hpp"
#include "censoring/io/report.hpp"
#include "censoring/io/results_csv.hpp"
#include "censoring/synth/generator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace censoring;
using nn::Matrix;
using nn::RngStream;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("censoring_test_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

synth::TrialBatch float_batch(std::size_t n, std::size_t channels, std::size_t samples, std::uint64_t seed) {
    RngStream rng(seed, 0);
    synth::TrialBatch b;
    b.channels = channels;
    b.samples = samples;
    b.classes = 3;
    b.nuisance = 300;
    b.x = Matrix(n, channels * samples);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : b.x.row(i)) v = static_cast<float>(rng.normal() * 100.0);
        b.y.push_back(static_cast<int>(rng.below(3)));
        b.s.push_back(static_cast<int>(rng.below(300)));
    }
    return b;
}

std::string serialize(const synth::TrialBatch& b) {
    std::ostringstream out(std::ios::binary);
    io::write_epoch_file(out, b);
    return out.str();
}

synth::TrialBatch parse(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return io::read_epoch_file(in);
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

const char* kSmallConfig = R"({
  "dataset": {
    "synthetic": {"variant": "A", "classes": 2, "subjects": 6, "sessions_per_subject": 1,
                  "latent_dim": 3, "input_dim": 5, "class_separation": 2.0},
    "trials_per_nuisance": 60,
    "seed": 11
  },
  "split": {"train": 4, "val": 0, "test": 2, "folds": [0, 1]},
  "seeds": [0, 1],
  "master_seed": 5,
  "train": {"epochs": 2, "batch_size": 64, "lr": 0.003, "latent_dim": 4, "encoder_hidden": [8],
            "classifier_hidden": [], "projector_hidden": [], "censor_hidden": [8]},
  "grid": {"modes": ["marginal"], "methods": ["dre"], "lambdas": [0.1, 1, 10]}
})";

io::ExperimentConfig small_experiment() { return io::parse_experiment_config(kSmallConfig); }

}  // namespace

TEST_CASE("epoch file layout and round trip") {
    CHECK(io::epoch_file_size(1, 2, 3) == 55);
    auto one = float_batch(1, 2, 3, 1);
    const auto bytes = serialize(one);
    CHECK(bytes.size() == 55);
    CHECK(bytes.substr(0, 4) == "EEGC");

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RngStream rng(seed, 9);
        const auto b = float_batch(1 + rng.below(40), 1 + rng.below(4), 1 + rng.below(5), seed);
        const auto written = serialize(b);
        CHECK(written.size() == io::epoch_file_size(b.size(), b.channels, b.samples));
        const auto back = parse(written);
        CHECK(back == b);
        CHECK(serialize(back) == written);
    }

    const auto path = fresh_dir("epoch") / "data.eeg";
    io::write_epoch_file(path, one);
    CHECK(io::read_epoch_file(path) == one);
}

TEST_CASE("epoch file narrows values to 32 bits") {
    auto b = float_batch(3, 2, 2, 4);
    b.x(0, 0) = 0.1;
    const auto back = parse(serialize(b));
    CHECK(back.x(0, 0) == static_cast<double>(0.1f));
}

TEST_CASE("epoch file rejects malformed input with positions") {
    const auto good = serialize(float_batch(4, 2, 3, 2));

    auto bad_magic = good;
    bad_magic.replace(0, 4, "XXXX");
    const auto magic_msg = message_of([&] { parse(bad_magic); });
    CHECK(magic_msg.find("byte 0") != std::string::npos);
    CHECK_THROWS_AS(parse(bad_magic), FormatError);

    auto bad_version = good;
    bad_version[4] = 7;
    CHECK(message_of([&] { parse(bad_version); }).find("byte 4") != std::string::npos);

    const auto truncated = good.substr(0, good.size() - 5);
    const auto trunc_msg = message_of([&] { parse(truncated); });
    CHECK(trunc_msg.find(std::to_string(good.size())) != std::string::npos);
    CHECK(trunc_msg.find(std::to_string(truncated.size())) != std::string::npos);

    CHECK_THROWS_AS(parse(good.substr(0, 10)), FormatError);
    CHECK_THROWS_AS(parse(good + "z"), FormatError);

    auto bad_label = good;
    bad_label[28] = 9;  // y of the first trial, 3 classes declared
    CHECK(message_of([&] { parse(bad_label); }).find("byte 28") != std::string::npos);

    auto out_of_range = float_batch(2, 1, 1, 3);
    out_of_range.y[1] = 3;
    CHECK_THROWS_AS(serialize(out_of_range), ConfigError);
}

TEST_CASE("experiment config parsing") {
    const auto c = small_experiment();
    CHECK(c.seeds == std::vector<std::uint64_t>{0, 1});
    CHECK(c.folds == std::vector<std::uint64_t>{0, 1});
    CHECK(c.master_seed == 5);
    CHECK(c.train_subjects == 4);
    CHECK(c.test_subjects == 2);
    REQUIRE(c.dataset.synthetic);
    CHECK(c.dataset.synthetic->subjects == 6);
    CHECK(c.dataset.synthetic->input_dim == 5);
    CHECK(c.base.epochs == 2);
    CHECK(c.base.optimizer.lr == 0.003);
    CHECK(c.base.model.encoder_hidden == std::vector<std::size_t>{8});
    CHECK(c.base.model.classifier_hidden.empty());
    CHECK(c.grid.lambdas == std::vector<double>{0.1, 1, 10});
    CHECK(c.grid.methods == std::vector<censor::Method>{censor::Method::density_ratio});

    auto edit = [](const std::string& from, const std::string& to) {
        std::string text = kSmallConfig;
        const auto at = text.find(from);
        REQUIRE(at != std::string::npos);
        return text.replace(at, from.size(), to);
    };
    CHECK_THROWS_AS(io::parse_experiment_config(edit("\"seeds\": [0, 1]", "\"seeds\": []")), ConfigError);
    CHECK_THROWS_AS(io::parse_experiment_config(edit("\"folds\": [0, 1]", "\"folds\": []")), ConfigError);
    CHECK_THROWS_AS(io::parse_experiment_config(edit("[0.1, 1, 10]", "[0, 1]")), ConfigError);
    CHECK_THROWS_AS(io::parse_experiment_config(edit("\"epochs\": 2", "\"epocs\": 2")), ConfigError);
    CHECK_THROWS_AS(io::parse_experiment_config(edit("\"epochs\": 2", "\"epochs\": 0")), ConfigError);
    CHECK_THROWS_AS(io::parse_experiment_config(edit("\"dre\"]", "\"dre\"], \"eval_points\": [\"best-val\"]")),
                    ConfigError);
    CHECK_NOTHROW(io::parse_experiment_config(
        edit("\"val\": 0", "\"val\": 1").replace(std::string(kSmallConfig).find("\"dre\"]"), 6,
                                                 "\"dre\"], \"eval_points\": [\"best-val\"]")));
    CHECK_THROWS_AS(io::parse_experiment_config("{not json"), ConfigError);
    CHECK_THROWS_AS(io::parse_experiment_config(edit("\"modes\": [\"marginal\"]", "\"modes\": [\"sideways\"]")),
                    ConfigError);
}

TEST_CASE("synthetic spec documents round trip") {
    synth::SynthParams p;
    p.variant = synth::Variant::C;
    p.subjects = 3;
    p.sessions_per_subject = 2;
    p.latent_dim = 3;
    p.input_dim = 9;
    p.w_dim = 2;
    RngStream rng(4, 0);
    const auto spec = synth::make_spec(p, rng);
    const std::string text = std::string("{\"seed\": 3, \"trials\": 50, \"spec\": ") + io::spec_to_json(spec) + "}";
    const auto file = io::parse_synth_spec(text);
    CHECK(file.trials == 50);
    CHECK(file.seed == 3);
    const auto back = io::resolve_spec(file);
    CHECK(io::spec_to_json(back) == io::spec_to_json(spec));
    RngStream a(1, 1), b(1, 1);
    CHECK(synth::generate(spec, 30, a).batch == synth::generate(back, 30, b).batch);

    const auto from_params = io::parse_synth_spec(R"({"params": {"variant": "B", "subjects": 4}, "seed": 2})");
    CHECK(io::resolve_spec(from_params).variant == synth::Variant::B);
    CHECK(io::resolve_spec(from_params).nuisance == 8);
    CHECK_THROWS_AS(io::parse_synth_spec(R"({"seed": 2})"), ConfigError);
}

TEST_CASE("results csv round trip") {
    std::vector<stats::RunResult> rows(3);
    rows[0].lambda = 0.0;
    rows[0].train_ba = 0.9;
    rows[0].test_ba = 0.7;
    rows[0].overfit_ratio = 0.7 / 0.9;
    rows[0].probe_ba = 0.25;
    rows[1] = rows[0];
    rows[1].run_id = 1;
    rows[1].lambda = 0.3;
    rows[1].mode = censor::Mode::complementary;
    rows[1].method = censor::Method::wasserstein;
    rows[1].val_ba = 0.123456789012345;
    rows[1].projection = model::Projection::nontrivial;
    rows[1].eval_point = train::EvalPoint::best_val;
    rows[2].run_id = 2;
    rows[2].lambda = 1.0;
    rows[2].failed = true;
    rows[2].epochs_trained = 3;

    std::ostringstream out;
    io::write_results_csv(out, rows);
    const std::string text = out.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "run_id,seed,fold,censor_mode,censor_method,lambda,projection,eval_point,epochs_trained,train_ba,val_ba,"
          "test_ba,overfit_ratio,probe_ba,status");
    CHECK(io::format_result_row(rows[0]).find(",none,none,0,") != std::string::npos);
    CHECK(io::format_result_row(rows[2]) == "2,0,0,marginal,dre,1,trivial,final,3,,,,,,failed");

    std::istringstream in(text);
    const auto back = io::read_results_csv(in);
    CHECK(back == rows);

    std::istringstream bad("run_id,seed\n");
    CHECK_THROWS_AS(io::read_results_csv(bad), FormatError);
}

TEST_CASE("sweep cardinality, ordering and shared controls") {
    const auto config = small_experiment();
    const auto runs = io::enumerate_runs(config);
    CHECK(runs.size() == 16);
    for (std::size_t i = 0; i < runs.size(); ++i) CHECK(runs[i].run_id == i);

    const auto out = io::run_experiment(config, false);
    REQUIRE(out.rows.size() == 16);
    CHECK(out.failures == 0);
    std::map<std::pair<std::uint64_t, int>, int> controls;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const auto& r = out.rows[i];
        CHECK(r.run_id == i);
        CHECK(r.epochs_trained == 2);
        CHECK(r.test_ba >= 0.0);
        CHECK(r.test_ba <= 1.0);
        if (r.lambda == 0.0) {
            ++controls[{r.seed, r.fold}];
            CHECK(i % 4 == 0);
        }
        if (i > 0) {
            const auto& p = out.rows[i - 1];
            CHECK(std::make_pair(p.seed, p.fold) <= std::make_pair(r.seed, r.fold));
        }
    }
    CHECK(controls.size() == 4);
    for (const auto& [key, count] : controls) CHECK(count == 1);
}

TEST_CASE("sweep writes a reproducible csv") {
    auto config = small_experiment();
    config.output_dir = fresh_dir("sweep_a");
    io::run_experiment(config);
    const auto first = file_bytes(config.output_dir / "results.csv");

    config.output_dir = fresh_dir("sweep_b");
    config.workers = 3;
    io::run_experiment(config);
    CHECK(file_bytes(config.output_dir / "results.csv") == first);
    CHECK(fs::exists(config.output_dir / "metadata.json"));

    const auto rows = io::read_results_csv(config.output_dir / "results.csv");
    CHECK(rows.size() == 16);
    std::ostringstream again;
    io::write_results_csv(again, rows);
    CHECK(again.str() == first);
}

TEST_CASE("failed runs are recorded without aborting the sweep") {
    auto data = float_batch(240, 2, 1, 8);
    data.nuisance = 6;
    data.classes = 2;
    for (std::size_t i = 0; i < data.size(); ++i) {
        data.s[i] = static_cast<int>(i % 6);
        data.y[i] = static_cast<int>((i / 6) % 2);
        if (data.s[i] < 3) data.x(i, 0) = std::numeric_limits<double>::quiet_NaN();
    }
    const auto dir = fresh_dir("failed");
    io::write_epoch_file(dir / "nan.eeg", data);

    auto config = small_experiment();
    config.dataset = {};
    config.dataset.epoch_file = dir / "nan.eeg";
    config.train_subjects = 4;
    config.output_dir = dir / "out";
    const auto out = io::run_experiment(config);
    CHECK(out.rows.size() == 16);
    CHECK(out.failures == 16);
    CHECK(out.diagnostics.size() == 16);
    CHECK(out.diagnostics.front().find("non-finite") != std::string::npos);
    const auto text = file_bytes(config.output_dir / "results.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);
    CHECK(text.find(",failed\n") != std::string::npos);
}

namespace {

stats::RunResult row(std::uint64_t seed, double lambda, double test_ba) {
    stats::RunResult r;
    r.seed = seed;
    r.lambda = lambda;
    r.train_ba = 1.0;
    r.test_ba = test_ba;
    r.overfit_ratio = test_ba;
    return r;
}

}  // namespace

TEST_CASE("report marks tiers exactly as the paired test does") {
    std::vector<stats::RunResult> rows;
    std::vector<double> control, strong, weak, loud;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double base = 0.6 + 0.01 * static_cast<double>(seed % 4);
        const double wobble = (seed % 2 == 0 ? 1.0 : -1.0) * 0.002 * static_cast<double>(seed + 1);
        control.push_back(base);
        strong.push_back(base + 0.05 + 0.001 * static_cast<double>(seed % 3));
        weak.push_back(base + wobble);
        loud.push_back(base + 0.01 + 0.02 * std::sin(static_cast<double>(seed)));
        rows.push_back(row(seed, 0.0, control.back()));
        rows.push_back(row(seed, 5.0, strong.back()));
        rows.push_back(row(seed, 0.5, weak.back()));
        rows.push_back(row(seed, 2.0, loud.back()));
    }
    const auto dir = fresh_dir("report");
    const auto report = io::emit_report(rows, dir);
    REQUIRE(report.figures.size() == 1);
    const auto& fig = report.figures.front();
    REQUIRE(fig.boxes.size() == 3);
    CHECK(fig.boxes[0].key.lambda == 0.5);
    CHECK(fig.boxes[1].key.lambda == 2.0);
    CHECK(fig.boxes[2].key.lambda == 5.0);
    REQUIRE(fig.control);
    CHECK(fig.control->median == doctest::Approx(stats::describe(control).median));

    const std::map<double, std::vector<double>> expected{{0.5, weak}, {2.0, loud}, {5.0, strong}};
    const std::string svg = file_bytes(fig.path);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("control-mean") != std::string::npos);
    std::size_t marked = 0;
    for (const auto& box : fig.boxes) {
        const auto t = stats::paired_t_test(expected.at(box.key.lambda), control);
        REQUIRE(box.versus_control);
        CHECK(box.versus_control->tier == t.tier);
        const auto start = svg.find("data-lambda=\"" + fmt::format("{}", box.key.lambda) + "\"");
        REQUIRE(start != std::string::npos);
        const auto group = svg.substr(start, svg.find("</g>", start) - start);
        const bool has_double_dagger = group.find("\xe2\x80\xa1") != std::string::npos;
        CHECK(has_double_dagger == (t.tier == stats::Tier::p001));
        marked += has_double_dagger;
    }
    CHECK(marked == 1);
    CHECK(fig.boxes[2].versus_control->tier == stats::Tier::p001);
    CHECK(fig.boxes[0].versus_control->tier == stats::Tier::none);

    const std::string summary = file_bytes(report.summary_path);
    CHECK(summary.rfind("# quantiles", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 6);

    CHECK_THROWS_AS(io::emit_report({}, dir), ConfigError);
}

TEST_CASE("report with a single lambda draws one box and reference lines") {
    std::vector<stats::RunResult> rows;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        rows.push_back(row(seed, 0.0, 0.5 + 0.01 * static_cast<double>(seed)));
        rows.push_back(row(seed, 1.0, 0.55 + 0.02 * static_cast<double>(seed)));
    }
    const auto report = io::emit_report(rows, fresh_dir("report_one"));
    REQUIRE(report.figures.size() == 1);
    CHECK(report.figures[0].boxes.size() == 1);
    const auto svg = file_bytes(report.figures[0].path);
    CHECK(std::count(svg.begin(), svg.end(), '<') > 10);
    std::size_t quartile_lines = 0;
    for (auto at = svg.find("control-quartile"); at != std::string::npos; at = svg.find("control-quartile", at + 1)) {
        ++quartile_lines;
    }
    CHECK(quartile_lines == 3);
}
