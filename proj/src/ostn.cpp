#include "omnisonic/ostn.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace omnisonic {

namespace {

void put_u32_le(std::vector<uint8_t>& buf, uint32_t v) {
    buf.push_back(static_cast<uint8_t>(v & 0xff));
    buf.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    buf.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    buf.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

uint32_t get_u32_le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void write_ostn(const std::string& path, const Tensor& t) {
    std::vector<uint8_t> buf;
    buf.reserve(8 + 4 * t.shape.size() + 4 * t.data.size());
    buf.push_back('O');
    buf.push_back('S');
    buf.push_back('T');
    buf.push_back('N');
    put_u32_le(buf, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) {
        if (d <= 0) fail("write_ostn: non-positive dim");
        put_u32_le(buf, static_cast<uint32_t>(d));
    }
    static_assert(sizeof(float) == 4);
    for (float v : t.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32_le(buf, bits);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail("write_ostn: cannot open " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) fail("write_ostn: write failed for " + path);
}

Tensor read_ostn(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("read_ostn: cannot open " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || buf[0] != 'O' || buf[1] != 'S' || buf[2] != 'T' || buf[3] != 'N')
        fail("read_ostn: bad magic in " + path);
    const uint32_t rank = get_u32_le(&buf[4]);
    if (rank == 0 || rank > 8) fail("read_ostn: unreasonable rank in " + path);
    if (buf.size() < 8 + 4ull * rank) fail("read_ostn: truncated header in " + path);
    std::vector<int> shape(rank);
    size_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        const uint32_t d = get_u32_le(&buf[8 + 4ull * i]);
        if (d == 0 || d > (1u << 28)) fail("read_ostn: bad dim in " + path);
        shape[i] = static_cast<int>(d);
        numel *= d;
    }
    const size_t payload_off = 8 + 4ull * rank;
    if (buf.size() != payload_off + 4 * numel) fail("read_ostn: size mismatch in " + path);
    Tensor t(shape);
    for (size_t i = 0; i < numel; ++i) {
        const uint32_t bits = get_u32_le(&buf[payload_off + 4 * i]);
        std::memcpy(&t.data[i], &bits, 4);
    }
    return t;
}

}  // namespace omnisonic
