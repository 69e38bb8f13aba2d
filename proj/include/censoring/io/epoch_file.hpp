#pragma once

#include "censoring/synth/trial_batch.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace censoring::io {

inline constexpr std::uint32_t kEpochFileVersion = 1;
inline constexpr std::size_t kEpochHeaderBytes = 28;

/// Header: "EEGC", u32 version, u32 trials, u32 channels, u32 samples, u32 classes, u32 nuisance.
/// Then per trial: u8 y, u16 s, f32 values (channels x samples, channel-major). Little-endian.
std::uint64_t epoch_file_size(std::uint64_t trials, std::uint64_t channels, std::uint64_t samples);

/// Values are narrowed to 32-bit floats. Throws ConfigError for labels the format cannot hold.
void write_epoch_file(std::ostream& out, const synth::TrialBatch& batch);
void write_epoch_file(const std::filesystem::path& path, const synth::TrialBatch& batch);

/// Throws FormatError naming the byte offset of the first bad field, or expected vs actual length.
synth::TrialBatch read_epoch_file(std::istream& in);
synth::TrialBatch read_epoch_file(const std::filesystem::path& path);

}  // namespace censoring::io
