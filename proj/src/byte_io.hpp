#pragma once

// Little-endian scalar encoding shared by the channel and checkpoint formats.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstring>
#include <span>
#include <type_traits>
#include <vector>

namespace memefuse::detail {

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::byte raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(raw), std::end(raw));
    }
    out.insert(out.end(), std::begin(raw), std::end(raw));
}

template <typename T>
T get_le(std::span<const std::byte> in, std::size_t offset) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::byte raw[sizeof(T)];
    std::memcpy(raw, in.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(raw), std::end(raw));
    }
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
}

} // namespace memefuse::detail
