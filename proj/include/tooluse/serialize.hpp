#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tooluse/errors.hpp"

namespace tooluse {

// All file formats are little-endian and packed byte by byte, independent of
// host endianness.

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f32(std::ostream& os, double v) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(os, bits);
}

inline void write_f32_array(std::ostream& os, const std::vector<double>& vals) {
    for (double v : vals) write_f32(os, v);
}

inline std::uint32_t read_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw io_error("truncated read in " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& is, const std::string& path) {
    std::uint64_t lo = read_u32(is, path);
    std::uint64_t hi = read_u32(is, path);
    return lo | (hi << 32);
}

inline double read_f32(std::istream& is, const std::string& path) {
    std::uint32_t bits = read_u32(is, path);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

inline void read_f32_array(std::istream& is, std::vector<double>& out, std::size_t n,
                           const std::string& path) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = read_f32(is, path);
}

inline void write_magic(std::ostream& os, const char magic[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char magic[5], const std::string& path) {
    char got[5] = {0, 0, 0, 0, 0};
    if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
        throw io_error("bad magic in " + path + ": expected " + std::string(magic, 4) +
                       ", got '" + std::string(got, 4) + "'");
    }
}

inline std::ofstream open_output(const std::string& path, bool binary = true) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw io_error("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_input(const std::string& path, bool binary = true) {
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is) throw io_error("cannot open for reading: " + path);
    return is;
}

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream is = open_input(path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(is),
                                      std::istreambuf_iterator<char>());
}

}  // namespace tooluse
