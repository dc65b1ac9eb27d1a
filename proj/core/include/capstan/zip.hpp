#pragma once

#include <capstan/errors.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace capstan {

class zip_error : public error {
public:
    using error::error;
};

struct zip_entry {
    std::string name;
    std::vector<std::uint8_t> data;
};

// Writes a store-only (uncompressed) ZIP archive. Deterministic: entries in
// the given order, fixed DOS timestamp (1980-01-01 00:00:00), no extra
// fields or comments.
std::vector<std::uint8_t> write_zip(const std::vector<zip_entry>& entries);

// Reads a store-only ZIP archive, entries in central directory order.
// Stored CRC values are not verified; callers check integrity against
// manifest digests instead. Throws zip_error on structural problems or
// compressed entries.
std::vector<zip_entry> read_zip(std::span<const std::uint8_t> bytes);

} // namespace capstan
