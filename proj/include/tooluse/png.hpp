#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tooluse/errors.hpp"
#include "tooluse/serialize.hpp"
#include "tooluse/tensor.hpp"

namespace tooluse {

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t crc = 0) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

inline std::uint32_t adler32(const unsigned char* data, std::size_t len) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

inline void push_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline void push_chunk(std::vector<unsigned char>& out, const char type[5],
                       const std::vector<unsigned char>& payload) {
    push_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::vector<unsigned char> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    push_u32_be(out, crc32(body.data(), body.size()));
}

}  // namespace detail

// Minimal RGB8 PNG writer using stored (uncompressed) deflate blocks. Output
// is deterministic byte for byte.
inline void write_png_rgb8(const std::string& path, std::size_t width, std::size_t height,
                           const std::vector<unsigned char>& rgb) {
    if (rgb.size() != width * height * 3) {
        throw dimension_error("write_png_rgb8: buffer " + shape_string({rgb.size()}) +
                              " vs dims " + shape_string({width, height, std::size_t{3}}));
    }
    std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    detail::push_u32_be(ihdr, static_cast<std::uint32_t>(width));
    detail::push_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    detail::push_chunk(png, "IHDR", ihdr);

    // Raw scanlines, each preceded by filter byte 0.
    std::vector<unsigned char> raw;
    raw.reserve(height * (1 + width * 3));
    for (std::size_t r = 0; r < height; ++r) {
        raw.push_back(0);
        raw.insert(raw.end(), rgb.begin() + static_cast<std::ptrdiff_t>(r * width * 3),
                   rgb.begin() + static_cast<std::ptrdiff_t>((r + 1) * width * 3));
    }
    std::vector<unsigned char> zlib = {0x78, 0x01};
    const std::size_t kBlock = 65535;
    for (std::size_t off = 0; off < raw.size(); off += kBlock) {
        const std::size_t len = std::min(kBlock, raw.size() - off);
        zlib.push_back(off + len >= raw.size() ? 1 : 0);  // final-block flag
        zlib.push_back(static_cast<unsigned char>(len & 0xff));
        zlib.push_back(static_cast<unsigned char>(len >> 8));
        zlib.push_back(static_cast<unsigned char>(~len & 0xff));
        zlib.push_back(static_cast<unsigned char>((~len >> 8) & 0xff));
        zlib.insert(zlib.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
                    raw.begin() + static_cast<std::ptrdiff_t>(off + len));
    }
    detail::push_u32_be(zlib, detail::adler32(raw.data(), raw.size()));
    detail::push_chunk(png, "IDAT", zlib);
    detail::push_chunk(png, "IEND", {});

    std::ofstream os = open_output(path);
    os.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!os) throw io_error("write failed: " + path);
}

inline std::vector<unsigned char> image_to_rgb8(const Tensor& image) {
    const std::size_t C = image.shape[0], H = image.shape[1], W = image.shape[2];
    std::vector<unsigned char> rgb(W * H * 3, 0);
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double v = ch < C ? image.data[(ch * H + r) * W + c] : 0.0;
                rgb[(r * W + c) * 3 + ch] =
                    static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
            }
        }
    }
    return rgb;
}

// Frames side by side in one strip.
inline void write_png_strip(const std::string& path, const std::vector<Tensor>& frames) {
    if (frames.empty()) throw dimension_error("write_png_strip: no frames");
    const std::size_t H = frames[0].shape[1], W = frames[0].shape[2];
    const std::size_t total_w = W * frames.size();
    std::vector<unsigned char> rgb(total_w * H * 3, 0);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::vector<unsigned char> one = image_to_rgb8(frames[f]);
        for (std::size_t r = 0; r < H; ++r) {
            for (std::size_t c = 0; c < W; ++c) {
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    rgb[(r * total_w + f * W + c) * 3 + ch] = one[(r * W + c) * 3 + ch];
                }
            }
        }
    }
    write_png_rgb8(path, total_w, H, rgb);
}

}  // namespace tooluse
