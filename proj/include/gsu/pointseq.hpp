#pragma once

// Pedestrian point-cloud sequences and their on-disk form (GSUP):
//   magic "GSUP" | frame count u32 | per frame: point count u32,
//   then (x, y, z) f32 triples in meters. Little-endian.

#include <array>
#include <string>
#include <vector>

#include "gsu/common.hpp"

namespace gsu::geom {

using Point3 = std::array<float, 3>;
using PointFrame = std::vector<Point3>;

struct GaitPointSequence {
    std::string subject_id;
    std::string sequence_id;
    std::vector<PointFrame> frames;

    int64_t frame_count() const { return static_cast<int64_t>(frames.size()); }
    int64_t total_points() const {
        int64_t n = 0;
        for (const auto& f : frames) n += static_cast<int64_t>(f.size());
        return n;
    }
};

}  // namespace gsu::geom

namespace gsu::io {

void write_pointseq(const std::string& path, const geom::GaitPointSequence& seq);
geom::GaitPointSequence read_pointseq(const std::string& path);

}  // namespace gsu::io
