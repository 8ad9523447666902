#include "eleson/serialize.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace eleson {

namespace {

void put_u16(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    if (!is) throw DataError("truncated model file");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("truncated model file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32_array(std::ostream& os, const std::vector<float>& data) {
    static_assert(sizeof(float) == 4);
    for (float f : data) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(os, bits);
    }
}

} // namespace

void write_elsn(std::ostream& os, const std::vector<TensorRecord>& records) {
    os.write("ELSN", 4);
    put_u16(os, 1);
    put_u32(os, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        if (r.name.size() > std::numeric_limits<std::uint16_t>::max())
            throw ConfigError("tensor name too long: " + r.name);
        if (r.dims.size() > 255) throw ConfigError("tensor rank too large: " + r.name);
        if (r.element_count() != r.data.size())
            throw ConfigError("tensor dims do not match payload: " + r.name);
        put_u16(os, static_cast<std::uint16_t>(r.name.size()));
        os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        os.put(static_cast<char>(r.dims.size()));
        for (auto d : r.dims) put_u32(os, d);
        put_f32_array(os, r.data);
    }
    if (!os) throw DataError("model write failed");
}

void write_elsn_file(const std::string& path, const std::vector<TensorRecord>& records) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    write_elsn(f, records);
}

std::vector<TensorRecord> read_elsn(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "ELSN", 4) != 0) throw DataError("not an ELSN model file");
    const std::uint16_t version = get_u16(is);
    if (version != 1) throw DataError("unsupported model format version " + std::to_string(version));
    const std::uint32_t count = get_u32(is);
    std::vector<TensorRecord> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorRecord r;
        const std::uint16_t name_len = get_u16(is);
        r.name.resize(name_len);
        is.read(r.name.data(), name_len);
        const int rank = is.get();
        if (rank < 0) throw DataError("truncated model file");
        r.dims.resize(static_cast<size_t>(rank));
        for (auto& d : r.dims) d = get_u32(is);
        r.data.resize(r.element_count());
        for (auto& f : r.data) {
            const std::uint32_t bits = get_u32(is);
            std::memcpy(&f, &bits, 4);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TensorRecord> read_elsn_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open model file: " + path);
    return read_elsn(f);
}

std::size_t elsn_byte_size(const std::vector<TensorRecord>& records) {
    std::size_t n = 4 + 2 + 4;
    for (const auto& r : records) n += 2 + r.name.size() + 1 + 4 * r.dims.size() + 4 * r.data.size();
    return n;
}

} // namespace eleson
