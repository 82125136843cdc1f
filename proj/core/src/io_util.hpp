#pragma once

// Internal I/O helpers shared by the store and dissection readers.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "unitsel/error.hpp"

namespace unitsel::detail {

inline void put_u32le(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline uint32_t get_u32le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline float get_f32le(const unsigned char* p) {
    return std::bit_cast<float>(get_u32le(p));
}

inline void put_f32le(std::string& out, float v) {
    put_u32le(out, std::bit_cast<uint32_t>(v));
}

// Decodes a contiguous f32-LE run. On little-endian hosts this is a memcpy.
inline void decode_f32le(const unsigned char* src, size_t count, float* dst) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst, src, count * sizeof(float));
    } else {
        for (size_t i = 0; i < count; ++i) dst[i] = get_f32le(src + i * 4);
    }
}

inline void encode_f32le(const float* src, size_t count, std::vector<unsigned char>& dst) {
    dst.resize(count * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst.data(), src, count * sizeof(float));
    } else {
        for (size_t i = 0; i < count; ++i) {
            const uint32_t bits = std::bit_cast<uint32_t>(src[i]);
            dst[i * 4 + 0] = static_cast<unsigned char>(bits & 0xff);
            dst[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
            dst[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
            dst[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
        }
    }
}

inline void read_exact(std::ifstream& stream, void* dst, size_t bytes, const std::string& what) {
    stream.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (stream.gcount() != static_cast<std::streamsize>(bytes))
        throw ParseError("truncated payload: failed reading " + what);
}

// Splits one CSV line on commas. No quoting: the formats here never embed
// commas in fields.
inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

template <typename T>
T parse_number(std::string_view field, const std::string& what, size_t line_no) {
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" +
                         std::string(field) + "'");
    return value;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

}  // namespace unitsel::detail
