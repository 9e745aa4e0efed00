#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "halrp/cl_engine.hpp"
#include "halrp/config.hpp"

namespace halrp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DataConfig data;
  ContinualState state;
  bool operator==(const Checkpoint&) const = default;
};

/// Layout: "HALRP01\0", u32 version, config echo, shape table with base
/// weights, per-task records, accuracy history, warnings, then a trailing
/// FNV-1a 64 checksum of every preceding byte. Numbers are little-endian,
/// reals are IEEE float64.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws ChecksumError on a checksum mismatch, FormatError otherwise.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);

}  // namespace halrp
