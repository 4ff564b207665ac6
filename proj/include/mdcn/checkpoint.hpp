#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdcn/net.hpp"

namespace mdcn {

// Binary checkpoint layout (all integers little-endian):
//   "MDCN" magic, u32 version,
//   field-tagged config: u32 field count, then per field
//     u32 key length, key bytes, i64 value,
//   u32 tensor count, then per tensor
//     u32 name length, name bytes, u8 dtype tag (0 = f32),
//     4 x u32 extents, extent-product f32 payload.
// Serialization is deterministic, so equal parameters give equal bytes.

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams<float>& m);
ModelParams<float> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const ModelParams<float>& m);
ModelParams<float> load_checkpoint(const std::string& path);

}  // namespace mdcn
