#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace capstan {

// SHA-256 (FIPS 180-4) of the given bytes.
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

// SHA-256 as 64 lowercase hex chars.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

// CRC-32 (ISO 3309, reflected, as used by ZIP).
std::uint32_t crc32(std::span<const std::uint8_t> data);

} // namespace capstan
