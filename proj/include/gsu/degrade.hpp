#pragma once

// Binary degradation masks: vertical line masks keep every k-th pixel row
// across all frames (beam-level elevation dropout), pepper masks drop each
// pixel independently with probability p, redrawn per frame (azimuthal
// dropout). Each mask generation owns a PRNG stream keyed by
// (seed, sequence label, frame).

#include <cstdint>
#include <string>
#include <vector>

#include "gsu/common.hpp"
#include "gsu/gaitgeom.hpp"

namespace gsu::degrade {

struct MaskVideo {
    int64_t frames = 0, height = 0, width = 0;
    std::vector<uint8_t> data;  // strictly {0, 1}

    uint8_t at(int64_t f, int64_t h, int64_t w) const {
        return data[(f * height + h) * width + w];
    }
    int64_t pixel_count() const { return frames * height * width; }
    int64_t kept_count() const {
        int64_t n = 0;
        for (uint8_t v : data) n += v;
        return n;
    }
};

struct MaskRecipe {
    int64_t vertical_keep_every = 1;  // k >= 1; removes (k-1)/k of the rows
    double pepper_drop_prob = 0.0;    // in [0, 1]
    uint64_t seed = 0;

    std::string label() const;  // e.g. "V1/2 P1/6"
};

MaskVideo make_vertical_mask(int64_t frames, int64_t height, int64_t width, int64_t keep_every);
MaskVideo make_pepper_mask(int64_t frames, int64_t height, int64_t width, double drop_prob,
                           uint64_t seed, const std::string& sequence_label = "");

// Elementwise AND of two masks of equal shape.
MaskVideo compose(const MaskVideo& a, const MaskVideo& b);

struct Degraded {
    geom::DepthVideo y;
    MaskVideo applied;  // the degradation mask H = vertical AND pepper
};

// y = m ⊙ x0. The conditioning mask used downstream is re-derived from y
// via observation_mask, not this applied mask.
Degraded compose_and_apply(const geom::DepthVideo& x0, const MaskRecipe& recipe,
                           const std::string& sequence_label = "");

// m = 1 exactly where y > 0.
MaskVideo observation_mask(const geom::DepthVideo& y);

}  // namespace gsu::degrade
