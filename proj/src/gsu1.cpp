#include "gsu/gsu1.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "GSU1 serialization assumes a little-endian host");

namespace gsu::io {

namespace {

template <class T>
void put(std::vector<uint8_t>& out, T v) {
    size_t off = out.size();
    out.resize(off + sizeof(T));
    std::memcpy(out.data() + off, &v, sizeof(T));
}

template <class T>
T take(const std::vector<uint8_t>& in, size_t& off) {
    if (off + sizeof(T) > in.size()) throw Error("GSU1: truncated stream");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

Entry Entry::f32(std::string name, std::vector<int64_t> dims, const float* data) {
    Entry e;
    e.name = std::move(name);
    e.dtype = Dtype::F32;
    e.dims = std::move(dims);
    e.raw.resize(e.numel() * 4);
    std::memcpy(e.raw.data(), data, e.raw.size());
    return e;
}

Entry Entry::f64(std::string name, std::vector<int64_t> dims, const double* data) {
    Entry e;
    e.name = std::move(name);
    e.dtype = Dtype::F64;
    e.dims = std::move(dims);
    e.raw.resize(e.numel() * 8);
    std::memcpy(e.raw.data(), data, e.raw.size());
    return e;
}

Entry Entry::u8(std::string name, std::vector<int64_t> dims, const uint8_t* data) {
    Entry e;
    e.name = std::move(name);
    e.dtype = Dtype::U8;
    e.dims = std::move(dims);
    e.raw.assign(data, data + e.numel());
    return e;
}

Entry Entry::text(std::string name, const std::string& s) {
    return u8(std::move(name), {static_cast<int64_t>(s.size())},
              reinterpret_cast<const uint8_t*>(s.data()));
}

std::vector<float> Entry::as_f32() const {
    if (dtype != Dtype::F32) throw Error("GSU1: entry '" + name + "' is not f32");
    std::vector<float> v(numel());
    std::memcpy(v.data(), raw.data(), raw.size());
    return v;
}

std::vector<double> Entry::as_f64() const {
    if (dtype != Dtype::F64) throw Error("GSU1: entry '" + name + "' is not f64");
    std::vector<double> v(numel());
    std::memcpy(v.data(), raw.data(), raw.size());
    return v;
}

std::vector<uint8_t> Entry::as_u8() const {
    if (dtype != Dtype::U8) throw Error("GSU1: entry '" + name + "' is not u8");
    return raw;
}

std::string Entry::as_text() const {
    auto b = as_u8();
    return std::string(b.begin(), b.end());
}

void Container::add(Entry e) {
    if (has(e.name)) throw Error("GSU1: duplicate entry name '" + e.name + "'");
    if (e.raw.size() != static_cast<size_t>(e.numel()) * dtype_size(e.dtype))
        throw Error("GSU1: payload length mismatch for '" + e.name + "'");
    entries_.push_back(std::move(e));
}

bool Container::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const Entry& Container::at(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw Error("GSU1: missing entry '" + name + "'");
}

std::vector<uint8_t> Container::to_bytes() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'G', 'S', 'U', '1'});
    put<uint16_t>(out, 1);
    put<uint32_t>(out, static_cast<uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        put<uint16_t>(out, static_cast<uint16_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        put<uint8_t>(out, static_cast<uint8_t>(e.dtype));
        put<uint8_t>(out, static_cast<uint8_t>(e.dims.size()));
        for (int64_t d : e.dims) put<uint64_t>(out, static_cast<uint64_t>(d));
        out.insert(out.end(), e.raw.begin(), e.raw.end());
    }
    return out;
}

Container Container::from_bytes(const std::vector<uint8_t>& bytes) {
    size_t off = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "GSU1", 4) != 0)
        throw Error("GSU1: bad magic");
    off = 4;
    uint16_t version = take<uint16_t>(bytes, off);
    if (version != 1) throw Error("GSU1: unsupported version " + std::to_string(version));
    uint32_t count = take<uint32_t>(bytes, off);
    Container c;
    for (uint32_t i = 0; i < count; ++i) {
        Entry e;
        uint16_t nlen = take<uint16_t>(bytes, off);
        if (off + nlen > bytes.size()) throw Error("GSU1: truncated name");
        e.name.assign(reinterpret_cast<const char*>(bytes.data() + off), nlen);
        off += nlen;
        uint8_t dt = take<uint8_t>(bytes, off);
        if (dt > 2) throw Error("GSU1: unknown dtype code " + std::to_string(dt));
        e.dtype = static_cast<Dtype>(dt);
        uint8_t rank = take<uint8_t>(bytes, off);
        e.dims.resize(rank);
        for (uint8_t d = 0; d < rank; ++d)
            e.dims[d] = static_cast<int64_t>(take<uint64_t>(bytes, off));
        size_t payload = static_cast<size_t>(e.numel()) * dtype_size(e.dtype);
        if (off + payload > bytes.size()) throw Error("GSU1: truncated payload for '" + e.name + "'");
        e.raw.assign(bytes.begin() + off, bytes.begin() + off + payload);
        off += payload;
        c.add(std::move(e));
    }
    return c;
}

void Container::write(const std::string& path) const { write_file_bytes(path, to_bytes()); }

Container Container::read(const std::string& path) { return from_bytes(read_file_bytes(path)); }

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamsize size = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    if (size > 0) f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw Error("failed reading file: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (!f) throw Error("failed writing file: " + path);
}

}  // namespace gsu::io
