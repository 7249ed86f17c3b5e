#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace clare::dataio {

// IDX layout: 0x00 0x00 | type code | rank | rank big-endian u32 dims | payload
inline constexpr std::uint8_t kIdxUnsignedByte = 0x08;

struct IdxHeader {
    std::uint8_t type_code = kIdxUnsignedByte;
    std::vector<std::uint32_t> dims;

    std::size_t element_count() const;
    std::size_t size_bytes() const { return 4 + 4 * dims.size(); }
    bool operator==(const IdxHeader&) const = default;
};

struct IdxArray {
    IdxHeader header;
    std::vector<std::uint8_t> data;

    bool operator==(const IdxArray&) const = default;
};

/// Decodes an unsigned-byte IDX array. Throws ParseError with the byte
/// offset on bad magic, unsupported type code, truncation or trailing bytes.
IdxArray parse_idx(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_idx(const IdxArray& array);

/// Reads a whole file, inflating it first if it starts with the gzip
/// signature 0x1F 0x8B.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace clare::dataio
