#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nab/common.hpp"

namespace nab {

namespace io_detail {

inline void put_u32le(std::ostream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> bytes = {
        static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes.data()), 4);
}

inline std::uint32_t get_u32le(std::istream& in, const std::string& what) {
    std::array<unsigned char, 4> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), 4)) {
        throw format_error("truncated " + what);
    }
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

// Raster payloads are 64-bit little-endian IEEE-754 regardless of the
// in-memory scalar type.
template <typename T>
void write_f64_payload(std::ostream& out, const std::vector<T>& values) {
    for (const T& v : values) {
        const double d = static_cast<double>(v);
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        std::array<unsigned char, 8> bytes{};
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(bytes.data()), 8);
    }
}

template <typename T>
void read_f64_payload(std::istream& in, std::vector<T>& values, std::size_t count,
                      const std::string& what) {
    values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::array<unsigned char, 8> bytes{};
        if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) {
            throw format_error("truncated payload in " + what);
        }
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        values[i] = static_cast<T>(d);
    }
}

inline void write_raster(const std::string& path, const char magic[4], std::size_t rows,
                         std::size_t cols, const auto& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot open for writing: " + path);
    out.write(magic, 4);
    put_u32le(out, static_cast<std::uint32_t>(rows));
    put_u32le(out, static_cast<std::uint32_t>(cols));
    write_f64_payload(out, values);
    if (!out) throw format_error("write failed: " + path);
}

template <typename T>
void read_raster(const std::string& path, const char magic[4], std::size_t& rows,
                 std::size_t& cols, std::vector<T>& values) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open for reading: " + path);
    char head[4] = {};
    if (!in.read(head, 4)) throw format_error("truncated header in " + path);
    if (std::memcmp(head, magic, 4) != 0) {
        throw format_error("bad magic in " + path + " (expected " + std::string(magic, 4) + ")");
    }
    rows = get_u32le(in, "header in " + path);
    cols = get_u32le(in, "header in " + path);
    if (rows == 0 || cols == 0) throw format_error("zero dimension in " + path);
    read_f64_payload(in, values, rows * cols, path);
    // Reject trailing garbage so a payload/dimension mismatch is caught in
    // both directions.
    char extra;
    if (in.read(&extra, 1)) throw format_error("payload larger than header dimensions in " + path);
}

}  // namespace io_detail

inline constexpr char kImageMagic[4] = {'F', '6', '4', 'R'};
inline constexpr char kSinogramMagic[4] = {'S', 'I', 'N', 'O'};

template <typename T>
void save_image(const Image<T>& image, const std::string& path) {
    require(image.values.size() == image.size(), "save_image: value count does not match dimensions");
    io_detail::write_raster(path, kImageMagic, image.height, image.width, image.values);
}

template <typename T = double>
Image<T> load_image(const std::string& path) {
    Image<T> image;
    io_detail::read_raster(path, kImageMagic, image.height, image.width, image.values);
    return image;
}

template <typename T>
void save_sinogram(const Sinogram<T>& sino, const std::string& path) {
    require(sino.values.size() == sino.size(), "save_sinogram: value count does not match dimensions");
    io_detail::write_raster(path, kSinogramMagic, sino.rows, sino.cols, sino.values);
}

template <typename T = double>
Sinogram<T> load_sinogram(const std::string& path) {
    Sinogram<T> sino;
    io_detail::read_raster(path, kSinogramMagic, sino.rows, sino.cols, sino.values);
    return sino;
}

// ---------------------------------------------------------------------------
// PNG export (8-bit grayscale, min-max normalized). Visualization side channel
// only; the F64R container is the lossless format. The encoder below emits
// stored (uncompressed) deflate blocks so there is no zlib dependency.

namespace png_detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t n, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed;
    for (std::size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
    return c;
}

inline void put_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>(v & 0xff));
}

inline void append_chunk(std::vector<unsigned char>& out, const char type[4],
                         const std::vector<unsigned char>& payload) {
    put_u32be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const std::uint32_t crc =
        crc32(out.data() + crc_start, out.size() - crc_start, 0xffffffffu) ^ 0xffffffffu;
    put_u32be(out, crc);
}

inline std::vector<unsigned char> zlib_stored(const std::vector<unsigned char>& raw) {
    std::vector<unsigned char> z;
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t pos = 0;
    do {
        const std::size_t chunk = std::min<std::size_t>(raw.size() - pos, 65535);
        const bool last = pos + chunk == raw.size();
        z.push_back(last ? 1 : 0);
        z.push_back(static_cast<unsigned char>(chunk & 0xff));
        z.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        z.push_back(static_cast<unsigned char>(~chunk & 0xff));
        z.push_back(static_cast<unsigned char>((~chunk >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + chunk);
        pos += chunk;
    } while (pos < raw.size());
    std::uint32_t a = 1, b = 0;
    for (unsigned char byte : raw) {
        a = (a + byte) % 65521;
        b = (b + a) % 65521;
    }
    put_u32be(z, (b << 16) | a);
    return z;
}

}  // namespace png_detail

inline void write_png_gray8(const std::string& path, std::size_t height, std::size_t width,
                            const std::vector<unsigned char>& pixels) {
    require(pixels.size() == height * width, "write_png_gray8: pixel count mismatch");
    std::vector<unsigned char> file = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

    std::vector<unsigned char> ihdr;
    png_detail::put_u32be(ihdr, static_cast<std::uint32_t>(width));
    png_detail::put_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // default filtering
    ihdr.push_back(0);  // no interlace
    png_detail::append_chunk(file, "IHDR", ihdr);

    std::vector<unsigned char> scanlines;
    scanlines.reserve(height * (width + 1));
    for (std::size_t r = 0; r < height; ++r) {
        scanlines.push_back(0);  // filter: none
        scanlines.insert(scanlines.end(), pixels.begin() + r * width,
                         pixels.begin() + (r + 1) * width);
    }
    png_detail::append_chunk(file, "IDAT", png_detail::zlib_stored(scanlines));
    png_detail::append_chunk(file, "IEND", {});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(file.data()),
              static_cast<std::streamsize>(file.size()));
    if (!out) throw format_error("write failed: " + path);
}

template <typename T>
void export_png(const Image<T>& image, const std::string& path) {
    require(image.size() > 0, "export_png: empty image");
    const auto [lo_it, hi_it] = std::minmax_element(image.values.begin(), image.values.end());
    const double lo = static_cast<double>(*lo_it);
    const double hi = static_cast<double>(*hi_it);
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::vector<unsigned char> pixels(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = (static_cast<double>(image.values[i]) - lo) * scale;
        pixels[i] = static_cast<unsigned char>(std::clamp(v + 0.5, 0.0, 255.0));
    }
    write_png_gray8(path, image.height, image.width, pixels);
}

}  // namespace nab
