#include "censoring/io/epoch_file.hpp"

#include "censoring/binary.hpp"
#include "censoring/errors.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace censoring::io {

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'C'};

}  // namespace

std::uint64_t epoch_file_size(std::uint64_t trials, std::uint64_t channels, std::uint64_t samples) {
    return kEpochHeaderBytes + trials * (3 + 4 * channels * samples);
}

void write_epoch_file(std::ostream& out, const synth::TrialBatch& batch) {
    if (batch.y.size() != batch.s.size()) throw ShapeError("epoch file: y and s lengths differ");
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.y[i] < 0 || batch.y[i] >= batch.classes || batch.s[i] < 0 || batch.s[i] >= batch.nuisance) {
            throw ConfigError("epoch file: trial " + std::to_string(i) + " has labels outside the declared ranges");
        }
    }
    batch.validate();
    if (batch.size() > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("epoch file: too many trials");
    if (batch.classes < 1 || batch.classes > 256) throw ConfigError("epoch file: class count must lie in [1, 256]");
    if (batch.nuisance < 1 || batch.nuisance > 65536) throw ConfigError("epoch file: nuisance count must lie in [1, 65536]");
    const std::size_t width = batch.channels * batch.samples;
    if (batch.x.cols() != width) throw ShapeError("epoch file: rows do not hold channels x samples values");

    out.write(kMagic, 4);
    binary::put<std::uint32_t>(out, kEpochFileVersion);
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.size()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.channels));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.samples));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.classes));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.nuisance));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        binary::put<std::uint8_t>(out, static_cast<std::uint8_t>(batch.y[i]));
        binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(batch.s[i]));
        for (double v : batch.x.row(i)) binary::put<float>(out, static_cast<float>(v));
    }
}

void write_epoch_file(const std::filesystem::path& path, const synth::TrialBatch& batch) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("epoch file: cannot open " + path.string() + " for writing");
    write_epoch_file(out, batch);
    if (!out) throw FormatError("epoch file: write to " + path.string() + " failed");
}

synth::TrialBatch read_epoch_file(std::istream& in) {
    binary::Reader r(in, "epoch file");
    char magic[4];
    r.read_raw(magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) {
        throw FormatError("epoch file: bad magic \"" + std::string(magic, 4) + "\" at byte 0 (expected \"EEGC\")");
    }
    const auto version = r.get<std::uint32_t>("version");
    if (version != kEpochFileVersion) {
        throw FormatError("epoch file: unsupported version " + std::to_string(version) + " at byte 4");
    }
    const auto trials = r.get<std::uint32_t>("trial count");
    const auto channels = r.get<std::uint32_t>("channel count");
    const auto samples = r.get<std::uint32_t>("sample count");
    const auto classes = r.get<std::uint32_t>("class count");
    const auto nuisance = r.get<std::uint32_t>("nuisance count");
    if (channels == 0 || samples == 0) throw FormatError("epoch file: zero channels or samples at byte 12");
    if (classes == 0 || classes > 256) throw FormatError("epoch file: class count " + std::to_string(classes) + " at byte 20");
    if (nuisance == 0 || nuisance > 65536) {
        throw FormatError("epoch file: nuisance count " + std::to_string(nuisance) + " at byte 24");
    }

    const std::uint64_t expected = epoch_file_size(trials, channels, samples);
    const std::size_t width = static_cast<std::size_t>(channels) * samples;
    const std::size_t record = 3 + 4 * width;
    const auto here = in.tellg();
    if (here != std::istream::pos_type(-1)) {
        in.seekg(0, std::ios::end);
        const auto actual = static_cast<std::uint64_t>(in.tellg());
        in.seekg(here);
        if (actual < expected) {
            throw FormatError("epoch file: truncated payload, expected " + std::to_string(expected) + " bytes, found " +
                              std::to_string(actual));
        }
    }
    std::string payload(static_cast<std::size_t>(expected - kEpochHeaderBytes), '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    const auto got = static_cast<std::uint64_t>(in.gcount());
    if (got != payload.size()) {
        throw FormatError("epoch file: truncated payload, expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(kEpochHeaderBytes + got));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("epoch file: trailing bytes after offset " + std::to_string(expected));
    }

    synth::TrialBatch batch;
    batch.channels = channels;
    batch.samples = samples;
    batch.classes = static_cast<int>(classes);
    batch.nuisance = static_cast<int>(nuisance);
    batch.x = nn::Matrix(trials, width);
    batch.y.resize(trials);
    batch.s.resize(trials);
    std::istringstream body(std::move(payload));
    binary::Reader p(body, "epoch file");
    for (std::size_t i = 0; i < trials; ++i) {
        const std::uint64_t at = kEpochHeaderBytes + i * record;
        batch.y[i] = p.get<std::uint8_t>("label");
        batch.s[i] = p.get<std::uint16_t>("nuisance");
        if (batch.y[i] >= batch.classes) {
            throw FormatError("epoch file: label " + std::to_string(batch.y[i]) + " at byte " + std::to_string(at) +
                              " exceeds the class count");
        }
        if (batch.s[i] >= batch.nuisance) {
            throw FormatError("epoch file: nuisance " + std::to_string(batch.s[i]) + " at byte " +
                              std::to_string(at + 1) + " exceeds the nuisance count");
        }
        for (double& v : batch.x.row(i)) v = static_cast<double>(p.get<float>("values"));
    }
    return batch;
}

synth::TrialBatch read_epoch_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("epoch file: cannot open " + path.string());
    return read_epoch_file(in);
}

}  // namespace censoring::io
