#pragma once

#include "memefuse/model.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace memefuse {

/// Checkpoint layout (little-endian):
///   magic "MFM1", u32 version = 1,
///   u32 mode, u32 d_m, u32 d_h, u32 bilinear_dim, u32 k,
///   u32 tensor count, then per tensor: u32 rank, rank x u64 dims,
///   float64 payload in row-major order of the logical shape.
/// Tensors: [M (out, d_m, d_h), b (out)] for bilinear modes, then W (out, in)
/// and bias (out) for each MLP layer.
inline constexpr char kCheckpointMagic[4] = {'M', 'F', 'M', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> encode_checkpoint(const Model& model);
/// Throws FormatError/LengthError/ShapeError on malformed input.
Model decode_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

} // namespace memefuse
