#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eleson/common.hpp"

namespace eleson {

// One named float32 tensor. Matrices are stored column-major.
struct TensorRecord {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
};

// Binary model format, little-endian:
//   magic "ELSN", version u16, parameter count u32, then per parameter:
//   name length u16 + UTF-8 name, rank u8, dims u32 each, float32 payload.
// Round-trips are bit-exact.
void write_elsn(std::ostream& os, const std::vector<TensorRecord>& records);
void write_elsn_file(const std::string& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_elsn(std::istream& is);
std::vector<TensorRecord> read_elsn_file(const std::string& path);

std::size_t elsn_byte_size(const std::vector<TensorRecord>& records);

} // namespace eleson
