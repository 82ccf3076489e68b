#include "gsu/pointseq.hpp"

#include <cmath>
#include <cstring>

#include "gsu/gsu1.hpp"

namespace gsu::io {

void write_pointseq(const std::string& path, const geom::GaitPointSequence& seq) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'G', 'S', 'U', 'P'});
    uint32_t fc = static_cast<uint32_t>(seq.frames.size());
    out.resize(out.size() + 4);
    std::memcpy(out.data() + out.size() - 4, &fc, 4);
    for (const auto& frame : seq.frames) {
        uint32_t pc = static_cast<uint32_t>(frame.size());
        size_t off = out.size();
        out.resize(off + 4 + frame.size() * 12);
        std::memcpy(out.data() + off, &pc, 4);
        std::memcpy(out.data() + off + 4, frame.data(), frame.size() * 12);
    }
    write_file_bytes(path, out);
}

geom::GaitPointSequence read_pointseq(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "GSUP", 4) != 0)
        throw Error("GSUP: bad magic in " + path);
    size_t off = 4;
    uint32_t fc;
    std::memcpy(&fc, bytes.data() + off, 4);
    off += 4;
    geom::GaitPointSequence seq;
    seq.frames.resize(fc);
    for (uint32_t f = 0; f < fc; ++f) {
        if (off + 4 > bytes.size()) throw Error("GSUP: truncated frame header in " + path);
        uint32_t pc;
        std::memcpy(&pc, bytes.data() + off, 4);
        off += 4;
        if (off + static_cast<size_t>(pc) * 12 > bytes.size())
            throw Error("GSUP: truncated points in " + path);
        seq.frames[f].resize(pc);
        std::memcpy(seq.frames[f].data(), bytes.data() + off, static_cast<size_t>(pc) * 12);
        off += static_cast<size_t>(pc) * 12;
        for (const auto& p : seq.frames[f])
            if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
                throw Error("GSUP: non-finite coordinate in " + path);
    }
    return seq;
}

}  // namespace gsu::io
