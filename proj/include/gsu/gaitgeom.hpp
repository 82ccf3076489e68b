#pragma once

// Sensor-view canonicalization and orthographic depth projection.
//
// Canonicalization recentres each frame on its xy center of mass (z kept)
// and rotates about z so the sensor direction maps to +x: larger x means
// closer to the sensor. Projection rasterizes canonical points onto an
// H x W grid; ties inside one pixel keep the largest stored depth
// (Z-buffer rule). Stored depth is (x + l_x/2) / l_x clamped to
// [depth_floor, 1]; background stays exactly 0 so occupancy is `value > 0`.

#include <cmath>
#include <optional>
#include <vector>

#include "gsu/common.hpp"
#include "gsu/gsu1.hpp"
#include "gsu/pointseq.hpp"

namespace gsu::geom {

struct CanonicalFrameMeta {
    double center_x = 0.0;
    double center_y = 0.0;   // center z is identically 0
    double sensor_angle = 0.0;  // atan2(center_y, center_x), in (-pi, pi]
};

struct CanonicalSequence {
    GaitPointSequence points;  // rotated/centered coordinates
    std::vector<CanonicalFrameMeta> meta;
};

struct ProjectionConfig {
    double l_z = 2.6, l_y = 2.6, l_x = 2.6;   // box extents, meters
    double r_z = 0.04, r_y = 0.04;            // meters per pixel
    double l_z_const = 0.3;                   // z normalization offset
    int64_t height = 64, width = 64;
    double depth_floor = 1.0 / 255.0;

    void validate() const;
    // Same physical box, resampled to an n x n grid.
    static ProjectionConfig square(int64_t n);
};

// F x 1 x H x W normalized-depth video plus what inversion needs.
struct DepthVideo {
    int64_t frames = 0, height = 0, width = 0;
    std::vector<float> data;               // row-major (f, 1, h, w)
    std::vector<CanonicalFrameMeta> meta;  // per frame
    double z_min = 0.0;                    // frame-0 canonical z minimum

    float& at(int64_t f, int64_t h, int64_t w) { return data[(f * height + h) * width + w]; }
    float at(int64_t f, int64_t h, int64_t w) const { return data[(f * height + h) * width + w]; }
    int64_t pixel_count() const { return frames * height * width; }
    int64_t occupied_count() const;
};

std::array<double, 3> center_of_mass(const PointFrame& frame);
double sensor_view_angle(double cx, double cy);

CanonicalSequence canonicalize(const GaitPointSequence& seq);
DepthVideo project(const CanonicalSequence& canonical, const ProjectionConfig& cfg);

// Exact algebraic inverse of the projection: one point per occupied pixel
// at pixel-center canonical coordinates. project(unproject_canonical(v))
// reproduces v bit-exactly (the depth video is a fixed point).
CanonicalSequence unproject_canonical(const DepthVideo& video, const ProjectionConfig& cfg);

// Canonical inverse followed by the inverse rotation/translation back to
// sensor coordinates (for point-cloud export).
GaitPointSequence unproject(const DepthVideo& video, const ProjectionConfig& cfg);

// GSU1 serialization. The container carries the depth tensor, per-frame
// meta, z_min and the projection config; extra entries (masks, recipe
// labels) are preserved by the callers that add them.
void add_depth_entries(io::Container& c, const DepthVideo& v, const ProjectionConfig& cfg,
                       const std::string& tensor_name = "depth");
struct LoadedVideo {
    DepthVideo video;
    ProjectionConfig config;
};
LoadedVideo depth_from_container(const io::Container& c, const std::string& tensor_name = "depth");

}  // namespace gsu::geom
