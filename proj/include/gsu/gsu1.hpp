#pragma once

// GSU1 named-tensor container. Little-endian throughout:
//   magic "GSU1" | version u16 | entry count u32
//   per entry: name len u16, name bytes, dtype u8 (0=f32 1=f64 2=u8),
//              rank u8, dims u64 each, raw row-major payload.
// Entry order is preserved, so write -> read -> write is byte-identical.

#include <cstdint>
#include <string>
#include <vector>

#include "gsu/common.hpp"

namespace gsu::io {

enum class Dtype : uint8_t { F32 = 0, F64 = 1, U8 = 2 };

inline size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::F32: return 4;
        case Dtype::F64: return 8;
        default: return 1;
    }
}

struct Entry {
    std::string name;
    Dtype dtype = Dtype::F32;
    std::vector<int64_t> dims;
    std::vector<uint8_t> raw;

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : dims) n *= d;
        return n;
    }

    static Entry f32(std::string name, std::vector<int64_t> dims, const float* data);
    static Entry f64(std::string name, std::vector<int64_t> dims, const double* data);
    static Entry u8(std::string name, std::vector<int64_t> dims, const uint8_t* data);
    static Entry text(std::string name, const std::string& s);

    std::vector<float> as_f32() const;
    std::vector<double> as_f64() const;
    std::vector<uint8_t> as_u8() const;
    std::string as_text() const;
};

class Container {
public:
    void add(Entry e);
    bool has(const std::string& name) const;
    const Entry& at(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }

    std::vector<uint8_t> to_bytes() const;
    static Container from_bytes(const std::vector<uint8_t>& bytes);

    void write(const std::string& path) const;
    static Container read(const std::string& path);

private:
    std::vector<Entry> entries_;
};

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace gsu::io
