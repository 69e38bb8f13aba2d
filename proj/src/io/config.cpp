#include "censoring/io/config.hpp"

#include "censoring/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace censoring::io {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed`, so typos do not silently fall back to defaults.
void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

nn::Matrix matrix_from(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of rows");
    if (j.empty()) return {};
    const std::size_t rows = j.size();
    const std::size_t cols = j.at(0).size();
    nn::Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json matrix_to(const nn::Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (double v : m.row(r)) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

synth::Variant parse_variant(const std::string& text) {
    if (text == "A" || text == "a") return synth::Variant::A;
    if (text == "B" || text == "b") return synth::Variant::B;
    if (text == "C" || text == "c") return synth::Variant::C;
    throw ConfigError("unknown synthetic variant '" + text + "'");
}

std::string variant_name(synth::Variant v) {
    switch (v) {
        case synth::Variant::A: return "A";
        case synth::Variant::B: return "B";
        case synth::Variant::C: return "C";
    }
    return "?";
}

nn::Activation parse_activation(const std::string& text) {
    if (text == "relu") return nn::Activation::relu;
    if (text == "abs") return nn::Activation::abs;
    if (text == "identity") return nn::Activation::identity;
    throw ConfigError("unknown activation '" + text + "'");
}

synth::SynthParams parse_params(const json& j) {
    const std::string where = "synthetic";
    check_keys(j,
               {"variant", "classes", "subjects", "sessions_per_subject", "latent_dim", "input_dim", "w_dim", "samples",
                "class_separation", "mixing_scale", "offset_scale", "session_scale", "noise_scale", "w_separation",
                "label_prior", "label_skew"},
               where);
    synth::SynthParams p;
    std::string variant = "A";
    read(j, "variant", variant, where);
    p.variant = parse_variant(variant);
    read(j, "classes", p.classes, where);
    read(j, "subjects", p.subjects, where);
    read(j, "sessions_per_subject", p.sessions_per_subject, where);
    read(j, "latent_dim", p.latent_dim, where);
    read(j, "input_dim", p.input_dim, where);
    read(j, "w_dim", p.w_dim, where);
    read(j, "samples", p.samples, where);
    read(j, "class_separation", p.class_separation, where);
    read(j, "mixing_scale", p.mixing_scale, where);
    read(j, "offset_scale", p.offset_scale, where);
    read(j, "session_scale", p.session_scale, where);
    read(j, "noise_scale", p.noise_scale, where);
    read(j, "w_separation", p.w_separation, where);
    read(j, "label_prior", p.label_prior, where);
    read(j, "label_skew", p.label_skew, where);
    return p;
}

synth::GenModelSpec parse_spec(const json& j) {
    const std::string where = "spec";
    check_keys(j,
               {"variant", "classes", "nuisance", "latent_dim", "input_dim", "samples", "nuisance_prior", "label_prior",
                "label_given_nuisance", "class_means", "mixing", "offsets", "w_means", "w_mixing", "waveform",
                "noise_scale"},
               where);
    synth::GenModelSpec s;
    std::string variant = "A";
    read(j, "variant", variant, where);
    s.variant = parse_variant(variant);
    read(j, "classes", s.classes, where);
    read(j, "nuisance", s.nuisance, where);
    read(j, "latent_dim", s.latent_dim, where);
    read(j, "input_dim", s.input_dim, where);
    read(j, "samples", s.samples, where);
    read(j, "nuisance_prior", s.nuisance_prior, where);
    read(j, "label_prior", s.label_prior, where);
    read(j, "waveform", s.waveform, where);
    read(j, "noise_scale", s.noise_scale, where);
    if (j.contains("label_given_nuisance")) s.label_given_nuisance = matrix_from(j["label_given_nuisance"], where);
    if (j.contains("class_means")) s.class_means = matrix_from(j["class_means"], where);
    if (j.contains("offsets")) s.offsets = matrix_from(j["offsets"], where);
    if (j.contains("w_means")) s.w_means = matrix_from(j["w_means"], where);
    if (j.contains("w_mixing")) s.w_mixing = matrix_from(j["w_mixing"], where);
    if (j.contains("mixing")) {
        if (!j["mixing"].is_array()) throw ConfigError("spec.mixing: expected a list of matrices");
        for (const auto& m : j["mixing"]) s.mixing.push_back(matrix_from(m, where + ".mixing"));
    }
    s.validate();
    return s;
}

train::TrainConfig parse_train(const json& j) {
    const std::string where = "train";
    check_keys(j,
               {"epochs", "batch_size", "lr", "betas", "eps", "weight_decay", "censor_lr", "censor_weight_decay",
                "censor_steps", "max_val_epochs", "latent_dim", "encoder_hidden", "classifier_hidden",
                "projector_hidden", "conv_channels", "conv_kernel", "conv_stride", "censor_hidden",
                "censor_activation", "power_iterations"},
               where);
    train::TrainConfig c;
    read(j, "epochs", c.epochs, where);
    read(j, "batch_size", c.batch_size, where);
    read(j, "lr", c.optimizer.lr, where);
    if (j.contains("betas")) {
        std::vector<double> betas;
        read(j, "betas", betas, where);
        if (betas.size() != 2) throw ConfigError("train.betas: expected two values");
        c.optimizer.beta1 = betas[0];
        c.optimizer.beta2 = betas[1];
    }
    read(j, "eps", c.optimizer.eps, where);
    read(j, "weight_decay", c.optimizer.weight_decay, where);
    if (j.contains("censor_lr") || j.contains("censor_weight_decay")) {
        nn::AdamWConfig censor = c.optimizer;
        read(j, "censor_lr", censor.lr, where);
        read(j, "censor_weight_decay", censor.weight_decay, where);
        c.censor_optimizer = censor;
    }
    read(j, "censor_steps", c.censor_steps, where);
    read(j, "max_val_epochs", c.max_val_epochs, where);
    read(j, "latent_dim", c.model.latent_dim, where);
    read(j, "encoder_hidden", c.model.encoder_hidden, where);
    read(j, "classifier_hidden", c.model.classifier_hidden, where);
    read(j, "projector_hidden", c.model.projector_hidden, where);
    read(j, "conv_channels", c.model.conv_channels, where);
    read(j, "conv_kernel", c.model.conv_kernel, where);
    read(j, "conv_stride", c.model.conv_stride, where);
    read(j, "censor_hidden", c.censor_hidden, where);
    if (j.contains("censor_activation")) {
        std::string act;
        read(j, "censor_activation", act, where);
        c.censor_activation = parse_activation(act);
    }
    read(j, "power_iterations", c.power_iterations, where);
    return c;
}

GridSpec parse_grid(const json& j) {
    const std::string where = "grid";
    check_keys(j, {"modes", "methods", "lambdas", "projections", "eval_points"}, where);
    GridSpec g;
    auto strings = [&](const char* key) {
        std::vector<std::string> v;
        read(j, key, v, where);
        return v;
    };
    if (j.contains("modes")) {
        g.modes.clear();
        for (const auto& s : strings("modes")) g.modes.push_back(censor::parse_mode(s));
    }
    if (j.contains("methods")) {
        g.methods.clear();
        for (const auto& s : strings("methods")) g.methods.push_back(censor::parse_method(s));
    }
    read(j, "lambdas", g.lambdas, where);
    if (j.contains("projections")) {
        g.projections.clear();
        for (const auto& s : strings("projections")) g.projections.push_back(train::parse_projection(s));
    }
    if (j.contains("eval_points")) {
        g.eval_points.clear();
        for (const auto& s : strings("eval_points")) g.eval_points.push_back(train::parse_eval_point(s));
    }
    return g;
}

json parse_text(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("experiment: the seed list is empty");
    if (folds.empty()) throw ConfigError("experiment: the fold list is empty");
    if (train_subjects == 0 || test_subjects == 0) throw ConfigError("experiment: need train and test subjects");
    if (workers < 1) throw ConfigError("experiment: workers must be >= 1");
    const int sources = dataset.synthetic.has_value() + dataset.explicit_spec.has_value() + !dataset.epoch_file.empty();
    if (sources != 1) throw ConfigError("experiment: give exactly one of synthetic, spec or epoch_file");
    if (dataset.nontarget_ratio < 0) throw ConfigError("experiment: nontarget_ratio must be >= 0");
    if (dataset.sessions_per_subject < 1) throw ConfigError("experiment: sessions_per_subject must be >= 1");
    if (grid.modes.empty() || grid.methods.empty() || grid.projections.empty() || grid.eval_points.empty()) {
        throw ConfigError("experiment: every grid axis needs at least one value");
    }
    for (double lambda : grid.lambdas) {
        if (!(lambda > 0.0)) throw ConfigError("experiment: grid lambdas must be > 0 (lambda = 0 is the built-in control)");
    }
    for (auto point : grid.eval_points) {
        if (point == train::EvalPoint::best_val && val_subjects == 0) {
            throw ConfigError("experiment: best-val checkpointing needs validation subjects");
        }
    }
    for (auto mode : grid.modes)
        for (auto method : grid.methods)
            for (double lambda : grid.lambdas)
                for (auto projection : grid.projections)
                    for (auto point : grid.eval_points) {
                        train::TrainConfig c = base;
                        c.mode = mode;
                        c.method = method;
                        c.lambda = lambda;
                        c.projection = projection;
                        c.eval_point = point;
                        c.validate();
                    }
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
    const json j = parse_text(json_text, "experiment config");
    check_keys(j,
               {"dataset", "split", "seeds", "master_seed", "train", "grid", "output_dir", "workers",
                "save_checkpoints"},
               "config");
    ExperimentConfig c;
    if (!j.contains("dataset")) throw ConfigError("config: missing 'dataset'");
    const json& d = j["dataset"];
    check_keys(d,
               {"synthetic", "spec", "epoch_file", "trials_per_nuisance", "sessions_per_subject", "nontarget_ratio",
                "seed"},
               "dataset");
    if (d.contains("synthetic")) {
        c.dataset.synthetic = parse_params(d["synthetic"]);
        c.dataset.sessions_per_subject = c.dataset.synthetic->sessions_per_subject;
    }
    if (d.contains("spec")) c.dataset.explicit_spec = parse_spec(d["spec"]);
    std::string epoch_file;
    read(d, "epoch_file", epoch_file, "dataset");
    c.dataset.epoch_file = epoch_file;
    read(d, "trials_per_nuisance", c.dataset.trials_per_nuisance, "dataset");
    if (!d.contains("synthetic")) read(d, "sessions_per_subject", c.dataset.sessions_per_subject, "dataset");
    read(d, "nontarget_ratio", c.dataset.nontarget_ratio, "dataset");
    read(d, "seed", c.dataset.data_seed, "dataset");

    if (j.contains("split")) {
        const json& s = j["split"];
        check_keys(s, {"train", "val", "test", "folds"}, "split");
        read(s, "train", c.train_subjects, "split");
        read(s, "val", c.val_subjects, "split");
        read(s, "test", c.test_subjects, "split");
        read(s, "folds", c.folds, "split");
    }
    read(j, "seeds", c.seeds, "config");
    read(j, "master_seed", c.master_seed, "config");
    if (j.contains("train")) c.base = parse_train(j["train"]);
    if (j.contains("grid")) c.grid = parse_grid(j["grid"]);
    std::string out = c.output_dir.string();
    read(j, "output_dir", out, "config");
    c.output_dir = out;
    read(j, "workers", c.workers, "config");
    read(j, "save_checkpoints", c.save_checkpoints, "config");
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(slurp(path));
}

SynthFileSpec parse_synth_spec(std::string_view json_text) {
    const json j = parse_text(json_text, "synthetic spec");
    check_keys(j, {"params", "spec", "seed", "trials"}, "synthetic spec");
    SynthFileSpec f;
    if (j.contains("params")) f.params = parse_params(j["params"]);
    if (j.contains("spec")) f.spec = parse_spec(j["spec"]);
    if (f.params.has_value() == f.spec.has_value()) {
        throw ConfigError("synthetic spec: give exactly one of 'params' or 'spec'");
    }
    read(j, "seed", f.seed, "synthetic spec");
    read(j, "trials", f.trials, "synthetic spec");
    return f;
}

synth::GenModelSpec resolve_spec(const SynthFileSpec& file) {
    if (file.spec) return *file.spec;
    nn::RngStream rng(file.seed, 0);
    return synth::make_spec(*file.params, rng);
}

std::string spec_to_json(const synth::GenModelSpec& s) {
    json j;
    j["variant"] = variant_name(s.variant);
    j["classes"] = s.classes;
    j["nuisance"] = s.nuisance;
    j["latent_dim"] = s.latent_dim;
    j["input_dim"] = s.input_dim;
    j["samples"] = s.samples;
    j["nuisance_prior"] = s.nuisance_prior;
    j["label_prior"] = s.label_prior;
    j["label_given_nuisance"] = matrix_to(s.label_given_nuisance);
    j["class_means"] = matrix_to(s.class_means);
    j["mixing"] = json::array();
    for (const auto& m : s.mixing) j["mixing"].push_back(matrix_to(m));
    j["offsets"] = matrix_to(s.offsets);
    j["w_means"] = matrix_to(s.w_means);
    j["w_mixing"] = matrix_to(s.w_mixing);
    j["waveform"] = s.waveform;
    j["noise_scale"] = s.noise_scale;
    return j.dump(1);
}

}  // namespace censoring::io
