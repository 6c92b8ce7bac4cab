#include "memefuse/channel_file.hpp"

#include "byte_io.hpp"
#include "memefuse/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace memefuse {

namespace {

void put_header(std::vector<std::byte>& out, std::uint32_t dim, std::uint64_t count) {
    for (char c : kChannelMagic) {
        out.push_back(static_cast<std::byte>(c));
    }
    detail::put_le<std::uint32_t>(out, kChannelVersion);
    detail::put_le<std::uint32_t>(out, dim);
    detail::put_le<std::uint64_t>(out, count);
}

void check_dim(std::uint32_t dim) {
    if (dim == 0) {
        throw ShapeError("channel dim must be positive");
    }
}

} // namespace

std::vector<std::byte> write_channel(std::span<const std::vector<float>> rows, std::uint32_t dim) {
    check_dim(dim);
    std::vector<std::byte> out;
    out.reserve(kChannelHeaderBytes + rows.size() * dim * sizeof(float));
    put_header(out, dim, rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != dim) {
            throw ShapeError("row " + std::to_string(r) + ": length " + std::to_string(rows[r].size()) +
                             " does not match dim " + std::to_string(dim));
        }
        for (float v : rows[r]) {
            if (!std::isfinite(v)) {
                throw ValidationError("row " + std::to_string(r) + ": non-finite value");
            }
            detail::put_le<float>(out, v);
        }
    }
    return out;
}

std::vector<std::byte> write_channel(const ChannelRows& rows) {
    const auto dim = static_cast<std::uint32_t>(rows.cols());
    check_dim(dim);
    std::vector<std::byte> out;
    out.reserve(kChannelHeaderBytes + rows.size() * sizeof(float));
    put_header(out, dim, static_cast<std::uint64_t>(rows.rows()));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            const float v = rows(r, c);
            if (!std::isfinite(v)) {
                throw ValidationError("row " + std::to_string(r) + ": non-finite value");
            }
            detail::put_le<float>(out, v);
        }
    }
    return out;
}

ChannelData read_channel(std::span<const std::byte> bytes) {
    if (bytes.size() < kChannelHeaderBytes) {
        throw LengthError("channel file shorter than its " + std::to_string(kChannelHeaderBytes) +
                          "-byte header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (std::memcmp(bytes.data(), kChannelMagic, 4) != 0) {
        throw FormatError("bad channel magic (expected \"MFE1\")");
    }
    const auto version = detail::get_le<std::uint32_t>(bytes, 4);
    if (version != kChannelVersion) {
        throw FormatError("unsupported channel version " + std::to_string(version));
    }
    const auto dim = detail::get_le<std::uint32_t>(bytes, 8);
    const auto count = detail::get_le<std::uint64_t>(bytes, 12);
    if (dim == 0) {
        throw FormatError("channel dim is zero");
    }
    const std::uint64_t payload = bytes.size() - kChannelHeaderBytes;
    // count*dim*4 may overflow for hostile headers; compare by division.
    if (payload % (4ull * dim) != 0 || payload / (4ull * dim) != count) {
        throw LengthError("channel payload is " + std::to_string(payload) + " bytes, header declares " +
                          std::to_string(count) + " rows of dim " + std::to_string(dim));
    }

    ChannelData data;
    data.dim = dim;
    data.rows.resize(static_cast<Eigen::Index>(count), dim);
    std::size_t offset = kChannelHeaderBytes;
    for (Eigen::Index r = 0; r < data.rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.rows.cols(); ++c) {
            const float v = detail::get_le<float>(bytes, offset);
            offset += sizeof(float);
            if (!std::isfinite(v)) {
                throw ValidationError("row " + std::to_string(r) + ": non-finite value at column " +
                                      std::to_string(c));
            }
            data.rows(r, c) = v;
        }
    }
    return data;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("short write to " + path.string());
    }
}

ChannelData read_channel_file(const std::filesystem::path& path) {
    try {
        return read_channel(read_file_bytes(path));
    } catch (const FormatError& e) {
        throw FormatError(path.filename().string() + ": " + e.what());
    } catch (const LengthError& e) {
        throw LengthError(path.filename().string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.filename().string() + ": " + e.what());
    }
}

} // namespace memefuse
