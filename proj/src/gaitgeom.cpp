#include "gsu/gaitgeom.hpp"

#include <algorithm>
#include <limits>

namespace gsu::geom {

void ProjectionConfig::validate() const {
    check(l_z > 0 && l_y > 0 && l_x > 0, "projection: box extents must be positive");
    check(r_z > 0 && r_y > 0, "projection: resolutions must be positive");
    check(depth_floor > 0 && depth_floor < 1, "projection: depth floor must lie in (0,1)");
    // The reference constants (2.6 m box, 0.04 m pitch, 64 pixels) leave one
    // uncovered row: l_z / r_z = 65. Allow that single-row slack.
    int64_t hf = static_cast<int64_t>(std::floor(l_z / r_z));
    int64_t wf = static_cast<int64_t>(std::floor(l_y / r_y));
    check(height == hf || height + 1 == hf, "projection: height inconsistent with l_z / r_z");
    check(width == wf || width + 1 == wf, "projection: width inconsistent with l_y / r_y");
}

ProjectionConfig ProjectionConfig::square(int64_t n) {
    check(n >= 1, "projection: grid size must be >= 1");
    ProjectionConfig cfg;
    cfg.height = cfg.width = n;
    cfg.r_z = cfg.l_z / static_cast<double>(n);
    cfg.r_y = cfg.l_y / static_cast<double>(n);
    return cfg;
}

int64_t DepthVideo::occupied_count() const {
    int64_t n = 0;
    for (float v : data) n += v > 0.0f;
    return n;
}

std::array<double, 3> center_of_mass(const PointFrame& frame) {
    check(!frame.empty(), "center_of_mass: empty frame");
    double sx = 0, sy = 0;
    for (const auto& p : frame) {
        sx += p[0];
        sy += p[1];
    }
    double n = static_cast<double>(frame.size());
    return {sx / n, sy / n, 0.0};
}

double sensor_view_angle(double cx, double cy) {
    if (cx == 0.0 && cy == 0.0)
        throw Error("sensor_view_angle: center at origin, direction undefined");
    return std::atan2(cy, cx);
}

CanonicalSequence canonicalize(const GaitPointSequence& seq) {
    check(!seq.frames.empty(), "canonicalize: sequence has no frames");
    CanonicalSequence out;
    out.points.subject_id = seq.subject_id;
    out.points.sequence_id = seq.sequence_id;
    out.points.frames.resize(seq.frames.size());
    out.meta.resize(seq.frames.size());
    for (size_t f = 0; f < seq.frames.size(); ++f) {
        auto c = center_of_mass(seq.frames[f]);
        double theta = sensor_view_angle(c[0], c[1]);
        double phi = theta + 3.14159265358979323846;
        double cp = std::cos(phi), sp = std::sin(phi);
        out.meta[f] = {c[0], c[1], theta};
        auto& dst = out.points.frames[f];
        dst.resize(seq.frames[f].size());
        for (size_t i = 0; i < dst.size(); ++i) {
            const auto& p = seq.frames[f][i];
            double dx = p[0] - c[0], dy = p[1] - c[1];
            dst[i] = {static_cast<float>(cp * dx + sp * dy),
                      static_cast<float>(-sp * dx + cp * dy), p[2]};
        }
    }
    return out;
}

DepthVideo project(const CanonicalSequence& canonical, const ProjectionConfig& cfg) {
    cfg.validate();
    const auto& frames = canonical.points.frames;
    check(!frames.empty(), "project: no frames");
    check(canonical.meta.size() == frames.size(), "project: meta/frame count mismatch");
    check(!frames[0].empty(), "project: frame 0 is empty");

    double z_min = std::numeric_limits<double>::infinity();
    for (const auto& p : frames[0]) z_min = std::min(z_min, static_cast<double>(p[2]));

    DepthVideo v;
    v.frames = static_cast<int64_t>(frames.size());
    v.height = cfg.height;
    v.width = cfg.width;
    v.data.assign(v.pixel_count(), 0.0f);
    v.meta = canonical.meta;
    v.z_min = z_min;

    const double half_y = cfg.l_y / 2.0;
    const double half_x = cfg.l_x / 2.0;
    for (int64_t f = 0; f < v.frames; ++f) {
        for (const auto& p : frames[static_cast<size_t>(f)]) {
            double h_arg = (static_cast<double>(p[2]) - z_min + cfg.l_z_const) / cfg.r_z;
            double w_arg = (static_cast<double>(p[1]) + half_y) / cfg.r_y;
            int64_t h = static_cast<int64_t>(std::floor(h_arg));
            int64_t w = static_cast<int64_t>(std::floor(w_arg));
            if (h < 0 || h >= v.height || w < 0 || w >= v.width) continue;  // dropped, not clamped
            double d = (static_cast<double>(p[0]) + half_x) / cfg.l_x;
            d = std::clamp(d, cfg.depth_floor, 1.0);
            float df = static_cast<float>(d);
            float& cell = v.at(f, h, w);
            if (df > cell) cell = df;
        }
    }
    return v;
}

CanonicalSequence unproject_canonical(const DepthVideo& video, const ProjectionConfig& cfg) {
    cfg.validate();
    check(video.meta.size() == static_cast<size_t>(video.frames),
          "unproject: missing per-frame meta");
    CanonicalSequence out;
    out.meta = video.meta;
    out.points.frames.resize(video.frames);
    const double half_y = cfg.l_y / 2.0;
    const double half_x = cfg.l_x / 2.0;
    for (int64_t f = 0; f < video.frames; ++f) {
        auto& dst = out.points.frames[static_cast<size_t>(f)];
        for (int64_t h = 0; h < video.height; ++h)
            for (int64_t w = 0; w < video.width; ++w) {
                float d = video.at(f, h, w);
                if (d < cfg.depth_floor) continue;  // background
                double xc = static_cast<double>(d) * cfg.l_x - half_x;
                double yc = (static_cast<double>(w) + 0.5) * cfg.r_y - half_y;
                double zc = (static_cast<double>(h) + 0.5) * cfg.r_z + video.z_min - cfg.l_z_const;
                dst.push_back({static_cast<float>(xc), static_cast<float>(yc),
                               static_cast<float>(zc)});
            }
    }
    return out;
}

GaitPointSequence unproject(const DepthVideo& video, const ProjectionConfig& cfg) {
    CanonicalSequence canon = unproject_canonical(video, cfg);
    GaitPointSequence seq;
    seq.frames.resize(video.frames);
    for (int64_t f = 0; f < video.frames; ++f) {
        const auto& m = video.meta[static_cast<size_t>(f)];
        double phi = m.sensor_angle + 3.14159265358979323846;
        double cp = std::cos(phi), sp = std::sin(phi);
        auto& dst = seq.frames[static_cast<size_t>(f)];
        dst.reserve(canon.points.frames[f].size());
        for (const auto& p : canon.points.frames[static_cast<size_t>(f)]) {
            // inverse rotation, then translate back to sensor coordinates
            double x = cp * p[0] - sp * p[1] + m.center_x;
            double y = sp * p[0] + cp * p[1] + m.center_y;
            dst.push_back({static_cast<float>(x), static_cast<float>(y), p[2]});
        }
    }
    return seq;
}

void add_depth_entries(io::Container& c, const DepthVideo& v, const ProjectionConfig& cfg,
                       const std::string& tensor_name) {
    c.add(io::Entry::f32(tensor_name, {v.frames, 1, v.height, v.width}, v.data.data()));
    std::vector<double> centers(v.frames * 2);
    std::vector<double> angles(v.frames);
    for (int64_t f = 0; f < v.frames; ++f) {
        centers[2 * f] = v.meta[f].center_x;
        centers[2 * f + 1] = v.meta[f].center_y;
        angles[f] = v.meta[f].sensor_angle;
    }
    c.add(io::Entry::f64("meta/center", {v.frames, 2}, centers.data()));
    c.add(io::Entry::f64("meta/angle", {v.frames}, angles.data()));
    c.add(io::Entry::f64("meta/z_min", {1}, &v.z_min));
    double box[6] = {cfg.l_z, cfg.l_y, cfg.l_x, cfg.r_z, cfg.r_y, cfg.l_z_const};
    c.add(io::Entry::f64("meta/box", {6}, box));
    c.add(io::Entry::f64("meta/depth_floor", {1}, &cfg.depth_floor));
}

LoadedVideo depth_from_container(const io::Container& c, const std::string& tensor_name) {
    const auto& de = c.at(tensor_name);
    check(de.dims.size() == 4 && de.dims[1] == 1,
          "depth video tensor must be (F,1,H,W)");
    LoadedVideo out;
    DepthVideo& v = out.video;
    v.frames = de.dims[0];
    v.height = de.dims[2];
    v.width = de.dims[3];
    v.data = de.as_f32();

    auto centers = c.at("meta/center").as_f64();
    auto angles = c.at("meta/angle").as_f64();
    check(static_cast<int64_t>(angles.size()) == v.frames, "meta/angle frame count mismatch");
    v.meta.resize(v.frames);
    for (int64_t f = 0; f < v.frames; ++f)
        v.meta[f] = {centers[2 * f], centers[2 * f + 1], angles[f]};
    v.z_min = c.at("meta/z_min").as_f64()[0];

    auto box = c.at("meta/box").as_f64();
    ProjectionConfig& cfg = out.config;
    cfg.l_z = box[0];
    cfg.l_y = box[1];
    cfg.l_x = box[2];
    cfg.r_z = box[3];
    cfg.r_y = box[4];
    cfg.l_z_const = box[5];
    cfg.height = v.height;
    cfg.width = v.width;
    cfg.depth_floor = c.at("meta/depth_floor").as_f64()[0];
    return out;
}

}  // namespace gsu::geom
