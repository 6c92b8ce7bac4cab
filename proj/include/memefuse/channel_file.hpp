#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace memefuse {

/// Row-major block of float32 vectors, the in-memory image of one channel file.
using ChannelRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Channel file layout (little-endian):
///   [0,4)   magic "MFE1"
///   [4,8)   version, u32 = 1
///   [8,12)  dim, u32
///   [12,20) count, u64
///   [20,..) count*dim float32, row-major
inline constexpr char kChannelMagic[4] = {'M', 'F', 'E', '1'};
inline constexpr std::uint32_t kChannelVersion = 1;
inline constexpr std::size_t kChannelHeaderBytes = 20;

struct ChannelData {
    std::uint32_t dim = 0;
    ChannelRows rows;

    std::uint64_t count() const { return static_cast<std::uint64_t>(rows.rows()); }
};

/// Encodes `rows` (each of length `dim`). Throws ShapeError naming the first
/// row of the wrong length, ValidationError on a non-finite entry.
std::vector<std::byte> write_channel(std::span<const std::vector<float>> rows, std::uint32_t dim);
std::vector<std::byte> write_channel(const ChannelRows& rows);

/// Decodes and validates a channel image. Throws FormatError (magic/version),
/// LengthError (size mismatch) or ValidationError (non-finite, with row index).
ChannelData read_channel(std::span<const std::byte> bytes);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

ChannelData read_channel_file(const std::filesystem::path& path);

} // namespace memefuse
