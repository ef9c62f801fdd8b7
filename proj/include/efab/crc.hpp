// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace efab {

/// CRC-32 (IEEE 802.3): reflected polynomial 0xEDB88320, init and final xor 0xFFFFFFFF.
std::uint32_t crc32(std::span<const std::uint8_t> data);
std::uint32_t crc32(std::string_view text);

/// Streaming form: crc32_update(crc32_init(), ...) then crc32_final.
inline constexpr std::uint32_t crc32_init() { return 0xFFFFFFFFu; }
std::uint32_t crc32_update(std::uint32_t state, std::span<const std::uint8_t> data);
inline constexpr std::uint32_t crc32_final(std::uint32_t state) { return state ^ 0xFFFFFFFFu; }

/// CRC-8, polynomial 0x07, init 0x00, no reflection, no final xor.
std::uint8_t crc8(std::span<const std::uint8_t> data);

}  // namespace efab
