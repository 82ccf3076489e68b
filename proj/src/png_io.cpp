#include "gsu/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gsu/gsu1.hpp"

namespace gsu::io {

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
    put_u32_be(out, static_cast<uint32_t>(data.size()));
    size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32_be(out, crc);
}

}  // namespace

void write_gray_png(const std::string& path, int64_t width, int64_t height,
                    const std::vector<uint8_t>& pixels) {
    check(width >= 1 && height >= 1, "png: empty image");
    check(pixels.size() == static_cast<size_t>(width * height), "png: pixel count mismatch");

    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

    std::vector<uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<uint32_t>(width));
    put_u32_be(ihdr, static_cast<uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    put_chunk(out, "IHDR", ihdr);

    // Raw scanlines with filter byte 0.
    std::vector<uint8_t> raw((width + 1) * height);
    for (int64_t h = 0; h < height; ++h) {
        raw[h * (width + 1)] = 0;
        std::memcpy(raw.data() + h * (width + 1) + 1, pixels.data() + h * width, width);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(bound);
    int rc = compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9);
    check(rc == Z_OK, "png: zlib compression failed");
    compressed.resize(bound);
    put_chunk(out, "IDAT", compressed);
    put_chunk(out, "IEND", {});

    write_file_bytes(path, out);
}

void write_depth_frame_png(const std::string& path, const geom::DepthVideo& v, int64_t frame) {
    check(frame >= 0 && frame < v.frames, "png: frame index out of range");
    std::vector<uint8_t> pixels(v.height * v.width);
    const float* src = v.data.data() + frame * v.height * v.width;
    for (size_t i = 0; i < pixels.size(); ++i) {
        float d = std::clamp(src[i], 0.0f, 1.0f);
        pixels[i] = static_cast<uint8_t>(std::lround(d * 255.0));
    }
    write_gray_png(path, v.width, v.height, pixels);
}

}  // namespace gsu::io
