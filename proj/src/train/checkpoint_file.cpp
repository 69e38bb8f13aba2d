#include "censoring/train/checkpoint_file.hpp"

#include "censoring/binary.hpp"

#include <bit>
#include <fstream>
#include <map>

namespace censoring::train {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'S', 'R'};

double from_bits(std::uint64_t v) { return std::bit_cast<double>(v); }
std::uint64_t to_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

NamedTensor vector_tensor(std::string name, std::vector<double> values) {
    NamedTensor t{std::move(name), {static_cast<std::uint32_t>(values.size())}, std::move(values)};
    return t;
}

std::vector<double> sizes(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::vector<double> optimizer_values(const nn::AdamWConfig& c) {
    return {c.lr, c.beta1, c.beta2, c.eps, c.weight_decay};
}

nn::AdamWConfig optimizer_config(const std::vector<double>& v) {
    return {.lr = v.at(0), .beta1 = v.at(1), .beta2 = v.at(2), .eps = v.at(3), .weight_decay = v.at(4)};
}

std::vector<double> rng_values(const nn::RngStream& r) {
    return {from_bits(r.seed()), from_bits(r.stream_id()), from_bits(r.counter())};
}

void append_block(std::vector<NamedTensor>& out, const std::string& prefix, std::span<const nn::ParamRef> params) {
    for (const auto& p : params) {
        NamedTensor t{prefix + p.name, {}, {p.values.begin(), p.values.end()}};
        for (auto d : p.shape) t.dims.push_back(static_cast<std::uint32_t>(d));
        out.push_back(std::move(t));
    }
}

void append_buffers(std::vector<NamedTensor>& out, const std::string& prefix, std::span<const nn::BufferRef> buffers) {
    for (const auto& b : buffers) {
        NamedTensor t{prefix + b.name, {}, {b.values.begin(), b.values.end()}};
        for (auto d : b.shape) t.dims.push_back(static_cast<std::uint32_t>(d));
        out.push_back(std::move(t));
    }
}

void append_optimizer(std::vector<NamedTensor>& out, const std::string& prefix, nn::AdamW& opt) {
    out.push_back(vector_tensor(prefix + ".step", {from_bits(opt.step_count())}));
    for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
        out.push_back(vector_tensor(prefix + ".m." + std::to_string(i), opt.first_moments()[i]));
        out.push_back(vector_tensor(prefix + ".v." + std::to_string(i), opt.second_moments()[i]));
    }
}

class TensorIndex {
public:
    explicit TensorIndex(std::span<const NamedTensor> tensors) {
        for (const auto& t : tensors) {
            if (!by_name_.emplace(t.name, &t).second) throw FormatError("checkpoint: duplicate tensor '" + t.name + "'");
        }
    }

    const NamedTensor* find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : it->second;
    }

    const std::vector<double>& values(const std::string& name) const {
        const auto* t = find(name);
        if (!t) throw FormatError("checkpoint: missing tensor '" + name + "'");
        return t->values;
    }

    double scalar(const std::string& name, std::size_t i) const {
        const auto& v = values(name);
        if (i >= v.size()) throw FormatError("checkpoint: tensor '" + name + "' is too short");
        return v[i];
    }

    void fill(const std::string& name, const std::vector<std::size_t>& shape, std::span<double> dst) const {
        const auto* t = find(name);
        if (!t) throw FormatError("checkpoint: missing tensor '" + name + "'");
        bool same = t->dims.size() == shape.size();
        for (std::size_t i = 0; same && i < shape.size(); ++i) same = t->dims[i] == shape[i];
        if (!same || t->values.size() != dst.size()) {
            throw FormatError("checkpoint: tensor '" + name + "' has the wrong shape for this architecture");
        }
        std::copy(t->values.begin(), t->values.end(), dst.begin());
    }

private:
    std::map<std::string, const NamedTensor*> by_name_;
};

void restore_optimizer(const TensorIndex& index, const std::string& prefix, nn::AdamW& opt, std::size_t blocks) {
    opt.set_step_count(to_bits(index.scalar(prefix + ".step", 0)));
    opt.first_moments().clear();
    opt.second_moments().clear();
    if (!index.find(prefix + ".m.0")) return;
    for (std::size_t i = 0; i < blocks; ++i) {
        opt.first_moments().push_back(index.values(prefix + ".m." + std::to_string(i)));
        opt.second_moments().push_back(index.values(prefix + ".v." + std::to_string(i)));
    }
}

nn::RngStream restore_rng(const TensorIndex& index, const std::string& name) {
    return nn::RngStream(to_bits(index.scalar(name, 0)), to_bits(index.scalar(name, 1)), to_bits(index.scalar(name, 2)));
}

std::vector<std::size_t> size_list(const TensorIndex& index, const std::string& name) {
    std::vector<std::size_t> out;
    for (double v : index.values(name)) out.push_back(static_cast<std::size_t>(v));
    return out;
}

}  // namespace

void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors) {
    out.write(kMagic, 4);
    binary::put<std::uint32_t>(out, kCheckpointVersion);
    for (const auto& t : tensors) {
        if (t.name.size() > 0xffff) throw FormatError("checkpoint: tensor name too long");
        if (t.dims.size() > 0xff) throw FormatError("checkpoint: tensor rank too large");
        std::size_t count = 1;
        for (auto d : t.dims) count *= d;
        if (count != t.values.size()) throw ShapeError("checkpoint: tensor '" + t.name + "' dims do not match its values");
        binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        binary::put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims) binary::put<std::uint32_t>(out, d);
        for (double v : t.values) binary::put<double>(out, v);
    }
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
    binary::Reader r(in, "checkpoint");
    char magic[4];
    r.read_raw(magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("checkpoint: bad magic at byte 0 (expected \"CNSR\")");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " at byte 4");
    }
    std::vector<NamedTensor> tensors;
    while (!r.at_end()) {
        NamedTensor t;
        const auto len = r.get<std::uint16_t>("tensor name length");
        t.name.resize(len);
        r.read_raw(t.name.data(), len, "tensor name");
        const auto rank = r.get<std::uint8_t>("tensor rank");
        std::size_t count = 1;
        for (int i = 0; i < rank; ++i) {
            t.dims.push_back(r.get<std::uint32_t>("tensor dims"));
            count *= t.dims.back();
        }
        t.values.resize(count);
        for (double& v : t.values) v = r.get<double>("tensor values");
        tensors.push_back(std::move(t));
    }
    return tensors;
}

std::vector<NamedTensor> checkpoint_tensors(const TrainConfig& config, Checkpoint& state, const DataShape& shape) {
    std::vector<NamedTensor> out;
    const auto& m = config.model;
    const double activation = config.censor_activation ? static_cast<double>(*config.censor_activation) : -1.0;
    out.push_back(vector_tensor("meta.run", {static_cast<double>(config.mode), static_cast<double>(config.method),
                                             config.lambda, static_cast<double>(config.projection),
                                             static_cast<double>(config.epochs), static_cast<double>(config.batch_size),
                                             static_cast<double>(config.censor_steps),
                                             static_cast<double>(config.eval_point),
                                             static_cast<double>(config.max_val_epochs),
                                             static_cast<double>(config.power_iterations), activation}));
    out.push_back(vector_tensor("meta.seed", {from_bits(config.seed)}));
    out.push_back(vector_tensor("meta.optimizer", optimizer_values(config.optimizer)));
    if (config.censor_optimizer) {
        out.push_back(vector_tensor("meta.censor_optimizer", optimizer_values(*config.censor_optimizer)));
    }
    out.push_back(vector_tensor("meta.model", {static_cast<double>(m.latent_dim), static_cast<double>(m.conv_channels),
                                               static_cast<double>(m.conv_kernel), static_cast<double>(m.conv_stride)}));
    out.push_back(vector_tensor("meta.encoder_hidden", sizes(m.encoder_hidden)));
    out.push_back(vector_tensor("meta.classifier_hidden", sizes(m.classifier_hidden)));
    out.push_back(vector_tensor("meta.projector_hidden", sizes(m.projector_hidden)));
    out.push_back(vector_tensor("meta.censor_hidden", sizes(config.censor_hidden)));

    out.push_back(vector_tensor("meta.data", {static_cast<double>(shape.channels), static_cast<double>(shape.samples),
                                              static_cast<double>(shape.classes), static_cast<double>(shape.nuisance)}));
    out.push_back(vector_tensor("state.epoch", {static_cast<double>(state.epoch)}));
    out.push_back(vector_tensor("rng.shuffle", rng_values(state.shuffle_rng)));
    out.push_back(vector_tensor("rng.permute", rng_values(state.permute_rng)));

    auto task_params = state.task.params();
    append_block(out, "task.", task_params);
    append_buffers(out, "task.", state.task.buffers());
    append_optimizer(out, "opt.task", state.task_optimizer);
    for (std::size_t i = 0; i < state.censors.size(); ++i) {
        const std::string prefix = "censor" + std::to_string(i);
        append_block(out, "", state.censors[i].params(prefix));
        append_buffers(out, "", state.censors[i].buffers(prefix));
        append_optimizer(out, "opt." + prefix, state.censor_optimizers[i]);
    }
    return out;
}

LoadedCheckpoint checkpoint_from_tensors(std::span<const NamedTensor> tensors) {
    const TensorIndex index(tensors);
    LoadedCheckpoint loaded;
    TrainConfig& c = loaded.config;
    const auto& run = index.values("meta.run");
    if (run.size() < 11) throw FormatError("checkpoint: meta.run is too short");
    c.mode = static_cast<censor::Mode>(static_cast<int>(run[0]));
    c.method = static_cast<censor::Method>(static_cast<int>(run[1]));
    c.lambda = run[2];
    c.projection = static_cast<model::Projection>(static_cast<int>(run[3]));
    c.epochs = static_cast<int>(run[4]);
    c.batch_size = static_cast<std::size_t>(run[5]);
    c.censor_steps = static_cast<int>(run[6]);
    c.eval_point = static_cast<EvalPoint>(static_cast<int>(run[7]));
    c.max_val_epochs = static_cast<int>(run[8]);
    c.power_iterations = static_cast<int>(run[9]);
    if (run[10] >= 0.0) c.censor_activation = static_cast<nn::Activation>(static_cast<int>(run[10]));
    c.seed = to_bits(index.scalar("meta.seed", 0));
    c.optimizer = optimizer_config(index.values("meta.optimizer"));
    if (index.find("meta.censor_optimizer")) c.censor_optimizer = optimizer_config(index.values("meta.censor_optimizer"));
    c.model.latent_dim = static_cast<std::size_t>(index.scalar("meta.model", 0));
    c.model.conv_channels = static_cast<std::size_t>(index.scalar("meta.model", 1));
    c.model.conv_kernel = static_cast<std::size_t>(index.scalar("meta.model", 2));
    c.model.conv_stride = static_cast<std::size_t>(index.scalar("meta.model", 3));
    c.model.encoder_hidden = size_list(index, "meta.encoder_hidden");
    c.model.classifier_hidden = size_list(index, "meta.classifier_hidden");
    c.model.projector_hidden = size_list(index, "meta.projector_hidden");
    c.censor_hidden = size_list(index, "meta.censor_hidden");

    DataShape& shape = loaded.shape;
    shape.channels = static_cast<std::size_t>(index.scalar("meta.data", 0));
    shape.samples = static_cast<std::size_t>(index.scalar("meta.data", 1));
    shape.classes = static_cast<int>(index.scalar("meta.data", 2));
    shape.nuisance = static_cast<int>(index.scalar("meta.data", 3));
    c.model.channels = shape.channels;
    c.model.samples = shape.samples;
    c.model.classes = shape.classes;

    try {
        loaded.state = initial_checkpoint(c, shape, nn::RngStream(c.seed, 0));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("checkpoint: stored configuration is invalid: ") + e.what());
    }
    Checkpoint& s = loaded.state;
    s.epoch = static_cast<int>(index.scalar("state.epoch", 0));
    s.shuffle_rng = restore_rng(index, "rng.shuffle");
    s.permute_rng = restore_rng(index, "rng.permute");

    auto task_params = s.task.params();
    for (auto& p : task_params) index.fill("task." + p.name, p.shape, p.values);
    for (auto& b : s.task.buffers()) index.fill("task." + b.name, b.shape, b.values);
    restore_optimizer(index, "opt.task", s.task_optimizer, task_params.size());
    for (std::size_t i = 0; i < s.censors.size(); ++i) {
        const std::string prefix = "censor" + std::to_string(i);
        auto params = s.censors[i].params(prefix);
        for (auto& p : params) index.fill(p.name, p.shape, p.values);
        for (auto& b : s.censors[i].buffers(prefix)) index.fill(b.name, b.shape, b.values);
        restore_optimizer(index, "opt." + prefix, s.censor_optimizers[i], params.size());
    }
    return loaded;
}

void write_checkpoint(const std::filesystem::path& path, const TrainConfig& config, Checkpoint& state,
                      const DataShape& shape) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("checkpoint: cannot open " + path.string() + " for writing");
    const auto tensors = checkpoint_tensors(config, state, shape);
    write_tensors(out, tensors);
    if (!out) throw FormatError("checkpoint: write to " + path.string() + " failed");
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open " + path.string());
    const auto tensors = read_tensors(in);
    return checkpoint_from_tensors(tensors);
}

}  // namespace censoring::train
