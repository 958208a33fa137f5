// Binary checkpoint format (all integers u32, all reals f64, little-endian):
//
//   magic     8 bytes  "TIOCKPT1"
//   version   u32      1
//   d         u32      embedding width
//   d_hidden  u32      FFN hidden width
//   C         u32      number of classes
//   flags     u32      bit 0: projection present, bit 1: identity activation
//   count     u32      number of blocks that follow
//   blocks    repeated { u32 name_len, name bytes (ASCII), u32 rows, u32 cols,
//                        rows*cols f64 values in row-major order }
//
// Block order is fixed:
//   gat.sigma_kernel (1x1), gat.projection (d x d, only if flag bit 0),
//   temporal.sigma_time (1x1), temporal.ln1.eps (1x1), temporal.ln2.eps (1x1),
//   temporal.ffn.w1 (d x d_hidden), temporal.ffn.b1 (d_hidden x 1),
//   temporal.ffn.w2 (d_hidden x d), temporal.ffn.b2 (d x 1),
//   temporal.ln1.gain, temporal.ln1.bias, temporal.ln2.gain, temporal.ln2.bias (d x 1 each),
//   classifier.weight (C x d), classifier.bias (C x 1).

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tio/model.hpp"

namespace tio {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
/// Throws MalformedCheckpoint.
Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Throws IoFailure.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace tio
