#include "gsu/degrade.hpp"

#include <cmath>
#include <sstream>

#include "gsu/prng.hpp"

namespace gsu::degrade {

namespace {

// "V1/2" removes 1/2 of the rows (keep_every 2); "P1/6" drops with p=1/6.
std::string ratio_label(int64_t k) {
    std::ostringstream os;
    os << "V" << (k - 1) << "/" << k;
    return os.str();
}

}  // namespace

std::string MaskRecipe::label() const {
    std::ostringstream os;
    os << ratio_label(vertical_keep_every) << " P";
    // Render p as n/6 when it is a sixth, else as a decimal.
    double n6 = pepper_drop_prob * 6.0;
    if (std::abs(n6 - std::round(n6)) < 1e-9)
        os << static_cast<int>(std::round(n6)) << "/6";
    else
        os << pepper_drop_prob;
    return os.str();
}

MaskVideo make_vertical_mask(int64_t frames, int64_t height, int64_t width, int64_t keep_every) {
    check(keep_every >= 1, "vertical mask: keep_every must be >= 1");
    check(frames >= 1 && height >= 1 && width >= 1, "vertical mask: bad shape");
    MaskVideo m;
    m.frames = frames;
    m.height = height;
    m.width = width;
    m.data.assign(m.pixel_count(), 0);
    for (int64_t f = 0; f < frames; ++f)
        for (int64_t h = 0; h < height; ++h) {
            if (h % keep_every != 0) continue;
            uint8_t* row = m.data.data() + (f * height + h) * width;
            std::fill(row, row + width, uint8_t(1));
        }
    return m;
}

MaskVideo make_pepper_mask(int64_t frames, int64_t height, int64_t width, double drop_prob,
                           uint64_t seed, const std::string& sequence_label) {
    check(drop_prob >= 0.0 && drop_prob <= 1.0, "pepper mask: drop probability outside [0,1]");
    check(frames >= 1 && height >= 1 && width >= 1, "pepper mask: bad shape");
    MaskVideo m;
    m.frames = frames;
    m.height = height;
    m.width = width;
    m.data.resize(m.pixel_count());
    for (int64_t f = 0; f < frames; ++f) {
        auto rng = rng::Stream::of(seed, "pepper", sequence_label, f);
        uint8_t* plane = m.data.data() + f * height * width;
        for (int64_t i = 0; i < height * width; ++i)
            plane[i] = rng.next_bernoulli(drop_prob) ? 0 : 1;
    }
    return m;
}

MaskVideo compose(const MaskVideo& a, const MaskVideo& b) {
    check(a.frames == b.frames && a.height == b.height && a.width == b.width,
          "mask compose: shape mismatch");
    MaskVideo out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] & b.data[i];
    return out;
}

Degraded compose_and_apply(const geom::DepthVideo& x0, const MaskRecipe& recipe,
                           const std::string& sequence_label) {
    MaskVideo v = make_vertical_mask(x0.frames, x0.height, x0.width, recipe.vertical_keep_every);
    MaskVideo p = make_pepper_mask(x0.frames, x0.height, x0.width, recipe.pepper_drop_prob,
                                   recipe.seed, sequence_label);
    Degraded out;
    out.applied = compose(v, p);
    out.y = x0;
    for (int64_t i = 0; i < x0.pixel_count(); ++i)
        out.y.data[i] = out.applied.data[i] ? x0.data[i] : 0.0f;
    return out;
}

MaskVideo observation_mask(const geom::DepthVideo& y) {
    MaskVideo m;
    m.frames = y.frames;
    m.height = y.height;
    m.width = y.width;
    m.data.resize(m.pixel_count());
    for (int64_t i = 0; i < y.pixel_count(); ++i) m.data[i] = y.data[i] > 0.0f ? 1 : 0;
    return m;
}

}  // namespace gsu::degrade
