#pragma once

// Generative metrics (PSNR, SSIM, temporal consistency) and the
// interpolation baselines used as comparison rows. Metrics operate in
// depth domain [0, 1].

#include <string>
#include <vector>

#include "gsu/degrade.hpp"
#include "gsu/gaitgeom.hpp"

namespace gsu::eval {

// 10 log10(peak^2 / MSE) over all F*H*W values; +inf when MSE == 0.
double psnr(const geom::DepthVideo& pred, const geom::DepthVideo& ref, double peak = 1.0);

// Standard SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1, averaged over valid window centers.
double ssim_frame(const float* a, const float* b, int64_t height, int64_t width);
double ssim(const geom::DepthVideo& pred, const geom::DepthVideo& ref);

// Temporal-gradient error versus the reference:
// mean over f of mean |(pred_{f+1}-pred_f) - (ref_{f+1}-ref_f)|.
double consistency(const geom::DepthVideo& pred, const geom::DepthVideo& ref);

enum class Interp { Nearest, Bilinear, Bicubic };
Interp interp_from_name(const std::string& name);

// Per-frame scattered-data fill of unknown pixels from known pixels.
// Known pixels are preserved exactly; a frame with no known pixels stays
// all-zero. Bilinear/bicubic interpolate along each grid axis through the
// nearest known samples (Lagrange form, so polynomials up to the kernel
// order are reproduced exactly) and average the axis estimates.
geom::DepthVideo interpolate_baseline(const geom::DepthVideo& y, const degrade::MaskVideo& m,
                                      Interp method);

struct SequenceMetrics {
    std::string sequence_id;
    std::string recipe;
    double psnr_db = 0, ssim = 0, consistency = 0;
};

struct MetricReport {
    std::vector<SequenceMetrics> rows;
    SequenceMetrics mean() const;
    std::string to_csv() const;  // header, rows, MEAN row
};

}  // namespace gsu::eval
