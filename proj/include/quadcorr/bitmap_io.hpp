#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "quadcorr/error.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/sieve.hpp"

namespace quadcorr {

inline constexpr std::array<char, 4> kBitmapMagic{'Q', 'C', 'S', 'V'};
inline constexpr std::uint8_t kBitmapVersion = 1;
inline constexpr std::size_t kBitmapHeaderBytes = 4 + 1 + 1 + 8 + 8;
inline constexpr std::size_t kBitmapTrailerBytes = 4;

inline std::uint64_t bitmap_file_size(std::uint64_t length) {
    return kBitmapHeaderBytes + (length + 7) / 8 + kBitmapTrailerBytes;
}

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

inline std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    boost::crc_32_type crc;
    crc.process_bytes(data, size);
    return crc.checksum();
}

} // namespace detail

inline std::vector<unsigned char> encode_bitmap(const SieveBitmap& bitmap) {
    std::vector<unsigned char> out;
    out.reserve(bitmap_file_size(bitmap.length()));
    out.insert(out.end(), kBitmapMagic.begin(), kBitmapMagic.end());
    out.push_back(kBitmapVersion);
    out.push_back(static_cast<unsigned char>(value(bitmap.form())));
    detail::put_le(out, bitmap.start());
    detail::put_le(out, bitmap.length());
    const auto words = bitmap.words();
    const std::uint64_t bytes = (bitmap.length() + 7) / 8;
    for (std::uint64_t b = 0; b < bytes; ++b) out.push_back(static_cast<unsigned char>((words[b / 8] >> (8 * (b % 8))) & 0xFF));
    detail::put_le(out, detail::crc32(out.data(), out.size()));
    return out;
}

inline SieveBitmap decode_bitmap(const std::vector<unsigned char>& in) {
    if (in.size() < kBitmapHeaderBytes + kBitmapTrailerBytes) throw format_error("bitmap file truncated");
    if (!std::equal(kBitmapMagic.begin(), kBitmapMagic.end(), in.begin())) throw format_error("bitmap file has bad magic");
    if (in[4] != kBitmapVersion) throw format_error("bitmap file has unsupported version " + std::to_string(in[4]));
    form_id d{};
    try {
        d = parse_form(in[5]);
    } catch (const unsupported_form&) {
        throw format_error("bitmap file has unknown form index " + std::to_string(in[5]));
    }
    const auto start = detail::get_le<std::uint64_t>(in.data() + 6);
    const auto length = detail::get_le<std::uint64_t>(in.data() + 14);
    if (length > kMaxSieveRange || in.size() != bitmap_file_size(length)) throw format_error("bitmap file size does not match its length field");
    const std::size_t body = in.size() - kBitmapTrailerBytes;
    if (detail::get_le<std::uint32_t>(in.data() + body) != detail::crc32(in.data(), body)) throw format_error("bitmap file CRC mismatch");
    if (start == 0) throw format_error("bitmap file has start 0");

    std::vector<std::uint64_t> words((length + 63) / 64, 0);
    for (std::uint64_t b = 0; b < (length + 7) / 8; ++b)
        words[b / 8] |= static_cast<std::uint64_t>(in[kBitmapHeaderBytes + b]) << (8 * (b % 8));
    if (length % 64 != 0 && !words.empty() && (words.back() >> (length % 64)) != 0)
        throw format_error("bitmap file has bits set past its length");
    return SieveBitmap(d, start, length, std::move(words));
}

/// Writes to a sibling temporary and renames it into place.
inline void write_bitmap(const SieveBitmap& bitmap, const std::filesystem::path& path) {
    const auto bytes = encode_bitmap(bitmap);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw error("cannot open " + tmp.string() + " for writing");
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline SieveBitmap read_bitmap(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_bitmap(bytes);
}

} // namespace quadcorr
