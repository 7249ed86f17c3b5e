#include "clare/dataio/idx.hpp"

#include "clare/errors.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <string>

namespace clare::dataio {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) | (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) | static_cast<std::uint32_t>(bytes[offset + 3]);
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex_byte(std::uint8_t v) {
    constexpr const char* digits = "0123456789ABCDEF";
    return {digits[v >> 4], digits[v & 0xF]};
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed, const std::filesystem::path& path) {
    z_stream stream{};
    if (inflateInit2(&stream, 16 + MAX_WBITS) != Z_OK) {
        throw std::runtime_error("zlib initialization failed");
    }
    stream.next_in = const_cast<Bytef*>(compressed.data());
    stream.avail_in = static_cast<uInt>(compressed.size());

    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> chunk(1 << 20);
    int status = Z_OK;
    while (status != Z_STREAM_END) {
        stream.next_out = chunk.data();
        stream.avail_out = static_cast<uInt>(chunk.size());
        status = inflate(&stream, Z_NO_FLUSH);
        if (status != Z_OK && status != Z_STREAM_END) {
            inflateEnd(&stream);
            throw ParseError("corrupt gzip stream in " + path.string(), stream.total_in);
        }
        out.insert(out.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(chunk.size() - stream.avail_out));
        if (status == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
            inflateEnd(&stream);
            throw ParseError("truncated gzip stream in " + path.string(), stream.total_in);
        }
    }
    inflateEnd(&stream);
    return out;
}

} // namespace

std::size_t IdxHeader::element_count() const {
    std::size_t n = 1;
    for (const auto d : dims) {
        n *= d;
    }
    return n;
}

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) {
        throw ParseError("IDX magic needs 4 bytes, got " + std::to_string(bytes.size()), 0);
    }
    if (bytes[0] != 0 || bytes[1] != 0) {
        throw ParseError("bad IDX magic: leading bytes must be zero", 0);
    }
    if (bytes[2] != kIdxUnsignedByte) {
        throw ParseError("unsupported IDX type code 0x" + hex_byte(bytes[2]) + " (only unsigned byte 0x08 is supported)",
                         2);
    }
    IdxArray array;
    array.header.type_code = bytes[2];
    const std::size_t rank = bytes[3];
    const std::size_t header_size = 4 + 4 * rank;
    if (bytes.size() < header_size) {
        throw ParseError("IDX header truncated: " + std::to_string(rank) + " dimensions need " +
                             std::to_string(header_size) + " bytes, got " + std::to_string(bytes.size()),
                         bytes.size());
    }
    for (std::size_t i = 0; i < rank; ++i) {
        array.header.dims.push_back(read_be32(bytes, 4 + 4 * i));
    }
    const std::size_t expected = array.header.element_count();
    const std::size_t actual = bytes.size() - header_size;
    if (actual < expected) {
        throw ParseError("IDX payload truncated: expected " + std::to_string(expected) + " bytes, got " +
                             std::to_string(actual),
                         bytes.size());
    }
    if (actual > expected) {
        throw ParseError("IDX payload has " + std::to_string(actual - expected) + " trailing bytes",
                         header_size + expected);
    }
    array.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header_size), bytes.end());
    return array;
}

std::vector<std::uint8_t> write_idx(const IdxArray& array) {
    if (array.header.dims.size() > 255) {
        throw DimensionError("IDX rank must fit in one byte");
    }
    if (array.data.size() != array.header.element_count()) {
        throw DimensionError("IDX payload has " + std::to_string(array.data.size()) + " bytes, dims require " +
                             std::to_string(array.header.element_count()));
    }
    std::vector<std::uint8_t> out = {0, 0, array.header.type_code, static_cast<std::uint8_t>(array.header.dims.size())};
    for (const auto d : array.header.dims) {
        append_be32(out, d);
    }
    out.insert(out.end(), array.data.begin(), array.data.end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFileError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) {
        return gunzip(bytes, path);
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

} // namespace clare::dataio
