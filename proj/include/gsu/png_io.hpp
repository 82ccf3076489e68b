#pragma once

// Minimal 8-bit grayscale PNG writer (zlib-backed), for depth-frame dumps.

#include <cstdint>
#include <string>
#include <vector>

#include "gsu/gaitgeom.hpp"

namespace gsu::io {

void write_gray_png(const std::string& path, int64_t width, int64_t height,
                    const std::vector<uint8_t>& pixels);

// Linear depth-to-gray mapping: 0 -> 0, 1 -> 255.
void write_depth_frame_png(const std::string& path, const geom::DepthVideo& v, int64_t frame);

}  // namespace gsu::io
