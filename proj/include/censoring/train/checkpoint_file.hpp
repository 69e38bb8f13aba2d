#pragma once

#include "censoring/train/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace censoring::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> values;

    bool operator==(const NamedTensor&) const = default;
};

/// "CNSR", u32 version, then until end of file, per tensor: u16 name length, name bytes, u8 rank,
/// u32 dims, f64 values. Everything little-endian.
void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors);
/// Throws FormatError naming the byte offset of the first malformed field.
std::vector<NamedTensor> read_tensors(std::istream& in);

struct LoadedCheckpoint {
    TrainConfig config;
    Checkpoint state;
    DataShape shape;
};

/// Parameters, buffers, optimizer moments, epoch, rng positions and the configuration needed to rebuild them.
std::vector<NamedTensor> checkpoint_tensors(const TrainConfig& config, Checkpoint& state, const DataShape& shape);
LoadedCheckpoint checkpoint_from_tensors(std::span<const NamedTensor> tensors);

void write_checkpoint(const std::filesystem::path& path, const TrainConfig& config, Checkpoint& state,
                      const DataShape& shape);
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace censoring::train
