#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbps/core/tensor.hpp"

namespace tbps {

// Binary parameter checkpoint:
//
//   bytes 0..7   magic "TBPSCKPT"
//   u32 (LE)     format version
//   u64 (LE)     manifest length in bytes
//   manifest     UTF-8 JSON {"meta": {...}, "params": [{"name", "shape"}, ...]}
//   payload      little-endian float32 values of every parameter, in
//                manifest order
//
// Values are rounded to float32 on save; loading yields doubles.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json meta;
  std::vector<NamedTensor> params;

  const Tensor& find(const std::string& name) const;
};

std::string serialize_checkpoint(std::span<const NamedTensor> params, const nlohmann::json& meta);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> params,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// 64-bit FNV-1a over a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace tbps
