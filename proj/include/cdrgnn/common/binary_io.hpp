#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "cdrgnn/common/error.hpp"

namespace cdrgnn::binary {

// Little-endian encoding independent of host byte order.

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = char((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}
inline void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = char((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}
inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(char(v)); }
inline void write_i64(std::ostream& out, std::int64_t v) { write_u64(out, std::uint64_t(v)); }
inline void write_i32(std::ostream& out, std::int32_t v) { write_u32(out, std::uint32_t(v)); }
inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, std::uint32_t(s.size()));
    out.write(s.data(), std::streamsize(s.size()));
}
inline void write_magic(std::ostream& out, const char (&magic)[9]) { out.write(magic, 8); }

inline void check(std::istream& in, const char* what) {
    if (!in) throw DataError(std::string("binary read failed: truncated ") + what);
}
inline std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    check(in, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
    return v;
}
inline std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    check(in, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[i]) << (8 * i);
    return v;
}
inline std::uint8_t read_u8(std::istream& in) {
    const int c = in.get();
    check(in, "u8");
    return std::uint8_t(c);
}
inline std::int64_t read_i64(std::istream& in) { return std::int64_t(read_u64(in)); }
inline std::int32_t read_i32(std::istream& in) { return std::int32_t(read_u32(in)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }
inline std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    check(in, "string");
    return s;
}
inline void expect_magic(std::istream& in, const char (&magic)[9]) {
    char buf[8];
    in.read(buf, 8);
    if (!in || std::memcmp(buf, magic, 8) != 0) throw DataError(std::string("bad magic, expected ") + magic);
}

}  // namespace cdrgnn::binary
