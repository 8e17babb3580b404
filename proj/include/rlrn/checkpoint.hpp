#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "rlrn/autodiff.hpp"

namespace rlrn {

struct CheckpointMeta {
  std::string stage;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  ad::ParameterSet params;
};

// Writes `<stem>.json` (manifest: name, shape, byte offset per parameter,
// seed, step count, stage tag) and `<stem>.bin` (little-endian float32,
// row-major, manifest order). Each file is written to a temporary name and
// renamed into place, so a crash never leaves a half-written checkpoint.
void save_checkpoint(const std::filesystem::path& stem, const ad::ParameterSet& params, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& stem);
bool checkpoint_exists(const std::filesystem::path& stem);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path blob_path(const std::filesystem::path& stem);

// Atomic text/binary file write helper shared by the I/O modules.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace rlrn
