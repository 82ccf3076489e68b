#include "gsu/evalkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace gsu::eval {

namespace {

void check_same_shape(const geom::DepthVideo& a, const geom::DepthVideo& b, const char* op) {
    check(a.frames == b.frames && a.height == b.height && a.width == b.width,
          std::string(op) + ": shape mismatch");
}

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

const std::array<double, kWin>& gauss_taps() {
    static const std::array<double, kWin> taps = [] {
        std::array<double, kWin> t{};
        double sum = 0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - (kWin - 1) / 2.0;
            t[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += t[i];
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Separable Gaussian filter, valid region only. src is H x W doubles;
// dst is (H - kWin + 1) x (W - kWin + 1).
void gauss_valid(const std::vector<double>& src, int64_t H, int64_t W, std::vector<double>& dst) {
    const auto& w = gauss_taps();
    const int64_t Wv = W - kWin + 1, Hv = H - kWin + 1;
    std::vector<double> tmp(H * Wv);
    for (int64_t h = 0; h < H; ++h)
        for (int64_t x = 0; x < Wv; ++x) {
            double s = 0;
            for (int i = 0; i < kWin; ++i) s += w[i] * src[h * W + x + i];
            tmp[h * Wv + x] = s;
        }
    dst.assign(Hv * Wv, 0.0);
    for (int64_t y = 0; y < Hv; ++y)
        for (int64_t x = 0; x < Wv; ++x) {
            double s = 0;
            for (int i = 0; i < kWin; ++i) s += w[i] * tmp[(y + i) * Wv + x];
            dst[y * Wv + x] = s;
        }
}

}  // namespace

double psnr(const geom::DepthVideo& pred, const geom::DepthVideo& ref, double peak) {
    check_same_shape(pred, ref, "psnr");
    double mse = 0;
    int64_t n = pred.pixel_count();
    for (int64_t i = 0; i < n; ++i) {
        double d = static_cast<double>(pred.data[i]) - static_cast<double>(ref.data[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim_frame(const float* a, const float* b, int64_t H, int64_t W) {
    check(H >= kWin && W >= kWin, "ssim: frame smaller than the 11x11 window");
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;  // L = 1
    std::vector<double> da(H * W), db(H * W), daa(H * W), dbb(H * W), dab(H * W);
    for (int64_t i = 0; i < H * W; ++i) {
        da[i] = a[i];
        db[i] = b[i];
        daa[i] = da[i] * da[i];
        dbb[i] = db[i] * db[i];
        dab[i] = da[i] * db[i];
    }
    std::vector<double> mu_a, mu_b, m_aa, m_bb, m_ab;
    gauss_valid(da, H, W, mu_a);
    gauss_valid(db, H, W, mu_b);
    gauss_valid(daa, H, W, m_aa);
    gauss_valid(dbb, H, W, m_bb);
    gauss_valid(dab, H, W, m_ab);

    double acc = 0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double va = m_aa[i] - mu_a[i] * mu_a[i];
        double vb = m_bb[i] - mu_b[i] * mu_b[i];
        double cov = m_ab[i] - mu_a[i] * mu_b[i];
        double num = (2.0 * mu_a[i] * mu_b[i] + C1) * (2.0 * cov + C2);
        double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + C1) * (va + vb + C2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu_a.size());
}

double ssim(const geom::DepthVideo& pred, const geom::DepthVideo& ref) {
    check_same_shape(pred, ref, "ssim");
    double acc = 0;
    int64_t plane = pred.height * pred.width;
    for (int64_t f = 0; f < pred.frames; ++f)
        acc += ssim_frame(pred.data.data() + f * plane, ref.data.data() + f * plane, pred.height,
                          pred.width);
    return acc / static_cast<double>(pred.frames);
}

double consistency(const geom::DepthVideo& pred, const geom::DepthVideo& ref) {
    check_same_shape(pred, ref, "consistency");
    check(pred.frames >= 2, "consistency: needs at least 2 frames");
    int64_t plane = pred.height * pred.width;
    double acc = 0;
    for (int64_t f = 0; f + 1 < pred.frames; ++f) {
        const float* p0 = pred.data.data() + f * plane;
        const float* p1 = p0 + plane;
        const float* r0 = ref.data.data() + f * plane;
        const float* r1 = r0 + plane;
        double frame_acc = 0;
        for (int64_t i = 0; i < plane; ++i) {
            double dp = static_cast<double>(p1[i]) - p0[i];
            double dr = static_cast<double>(r1[i]) - r0[i];
            frame_acc += std::abs(dp - dr);
        }
        acc += frame_acc / static_cast<double>(plane);
    }
    return acc / static_cast<double>(pred.frames - 1);
}

Interp interp_from_name(const std::string& name) {
    if (name == "nearest") return Interp::Nearest;
    if (name == "bilinear") return Interp::Bilinear;
    if (name == "bicubic") return Interp::Bicubic;
    throw Error("unknown interpolation method: " + name);
}

namespace {

struct AxisSamples {
    // positions and values of the nearest known samples along one axis,
    // at most 2 on each side, ordered by position
    double pos[4];
    double val[4];
    int count = 0;
};

// Lagrange interpolation through up to 4 points; exact for polynomials of
// degree count-1.
double lagrange_at(const AxisSamples& s, double x) {
    double acc = 0;
    for (int i = 0; i < s.count; ++i) {
        double li = 1.0;
        for (int j = 0; j < s.count; ++j) {
            if (j == i) continue;
            li *= (x - s.pos[j]) / (s.pos[i] - s.pos[j]);
        }
        acc += s.val[i] * li;
    }
    return acc;
}

// Collect up to `per_side` known samples walking outward from (h, w) along
// the given axis (dh, dw in {-1, 0, 1}).
template <class KnownAt>
void collect_side(AxisSamples& s, KnownAt&& known, int64_t h, int64_t w, int64_t dh, int64_t dw,
                  int64_t H, int64_t W, int per_side) {
    int found = 0;
    int64_t ch = h + dh, cw = w + dw;
    while (found < per_side && ch >= 0 && ch < H && cw >= 0 && cw < W) {
        if (auto v = known(ch, cw)) {
            s.pos[s.count] = static_cast<double>(dh != 0 ? ch : cw);
            s.val[s.count] = *v;
            ++s.count;
            ++found;
        }
        ch += dh;
        cw += dw;
    }
}

}  // namespace

geom::DepthVideo interpolate_baseline(const geom::DepthVideo& y, const degrade::MaskVideo& m,
                                      Interp method) {
    check(y.frames == m.frames && y.height == m.height && y.width == m.width,
          "interpolate_baseline: video/mask shape mismatch");
    geom::DepthVideo out = y;
    const int64_t H = y.height, W = y.width, plane = H * W;
    const int per_side = method == Interp::Bicubic ? 2 : (method == Interp::Bilinear ? 2 : 0);
    const int max_pts = method == Interp::Bicubic ? 4 : 2;

    for (int64_t f = 0; f < y.frames; ++f) {
        const float* yf = y.data.data() + f * plane;
        const uint8_t* mf = m.data.data() + f * plane;
        float* of = out.data.data() + f * plane;

        std::vector<std::pair<int64_t, int64_t>> known;
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w)
                if (mf[h * W + w]) known.emplace_back(h, w);
        if (known.empty()) continue;  // frame left all-zero

        auto known_at = [&](int64_t h, int64_t w) -> std::optional<double> {
            if (mf[h * W + w]) return static_cast<double>(yf[h * W + w]);
            return std::nullopt;
        };
        auto nearest_value = [&](int64_t h, int64_t w) {
            int64_t best_d2 = std::numeric_limits<int64_t>::max();
            double best_v = 0;
            for (const auto& [kh, kw] : known) {
                int64_t d2 = (kh - h) * (kh - h) + (kw - w) * (kw - w);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best_v = static_cast<double>(yf[kh * W + kw]);
                }
            }
            return best_v;
        };

        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                if (mf[h * W + w]) continue;  // known pixels preserved exactly
                double value;
                if (method == Interp::Nearest) {
                    value = nearest_value(h, w);
                } else {
                    // Vertical then horizontal estimate, averaged when both exist.
                    double est[2];
                    int n_est = 0;
                    for (int axis = 0; axis < 2; ++axis) {
                        AxisSamples raw;
                        int64_t dh = axis == 0 ? -1 : 0, dw = axis == 0 ? 0 : -1;
                        collect_side(raw, known_at, h, w, dh, dw, H, W, per_side);
                        collect_side(raw, known_at, h, w, -dh, -dw, H, W, per_side);
                        if (raw.count == 0) continue;
                        AxisSamples sorted;
                        std::array<int, 4> order{0, 1, 2, 3};
                        std::sort(order.begin(), order.begin() + raw.count,
                                  [&](int a, int b) { return raw.pos[a] < raw.pos[b]; });
                        sorted.count = std::min(raw.count, max_pts);
                        for (int i = 0; i < sorted.count; ++i) {
                            sorted.pos[i] = raw.pos[order[i]];
                            sorted.val[i] = raw.val[order[i]];
                        }
                        double x = static_cast<double>(axis == 0 ? h : w);
                        est[n_est++] = lagrange_at(sorted, x);
                    }
                    if (n_est == 0)
                        value = nearest_value(h, w);
                    else if (n_est == 1)
                        value = est[0];
                    else
                        value = 0.5 * (est[0] + est[1]);
                }
                of[h * W + w] = static_cast<float>(std::clamp(value, 0.0, 1.0));
            }
    }
    return out;
}

SequenceMetrics MetricReport::mean() const {
    SequenceMetrics m;
    m.sequence_id = "MEAN";
    if (rows.empty()) return m;
    for (const auto& r : rows) {
        m.psnr_db += r.psnr_db;
        m.ssim += r.ssim;
        m.consistency += r.consistency;
    }
    double n = static_cast<double>(rows.size());
    m.psnr_db /= n;
    m.ssim /= n;
    m.consistency /= n;
    m.recipe = rows.front().recipe;
    return m;
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os << "sequence_id,recipe,psnr_db,ssim,consistency\n";
    auto emit = [&os](const SequenceMetrics& r) {
        os << r.sequence_id << ',' << r.recipe << ',' << r.psnr_db << ',' << r.ssim << ','
           << r.consistency << '\n';
    };
    for (const auto& r : rows) emit(r);
    emit(mean());
    return os.str();
}

}  // namespace gsu::eval
