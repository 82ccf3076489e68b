#pragma once

// Continuous-time variance-preserving diffusion with the alpha-cosine
// schedule: alpha_t = cos(pi t / 2), sigma_t = sin(pi t / 2),
// lambda_t = alpha^2 / sigma^2. Time is clamped to [t_min, t_max] to keep
// alpha and sigma strictly positive.
//
// Videos live in depth domain [0, 1] outside this module; the diffusion
// domain is u = 2 d - 1 (background maps to -1). Known pixels are pinned by
// re-injecting the observation into the latent before every denoiser call,
// and the loss is averaged over unknown pixels only.

#include <functional>

#include "gsu/prng.hpp"
#include "gsu/tensor.hpp"

namespace gsu::diff {

struct SchedulePoint {
    double t, alpha, sigma, log_snr;
};

struct Schedule {
    // t_max keeps alpha(t_max) = sin(pi (1-t_max) / 2) large enough that the
    // 1/alpha in predict_x0 does not amplify f32 quantization of eps_hat
    // beyond ~1e-4; 1 - 1e-4 would give a 6400x amplification.
    double t_min = 1e-4;
    double t_max = 1.0 - 1e-3;

    double clamp_t(double t) const { return std::min(std::max(t, t_min), t_max); }
    SchedulePoint at(double t) const;
};

struct TransitionParams {
    double alpha_ts;   // alpha_{t|s}
    double sigma2_ts;  // sigma^2_{t|s}
};
TransitionParams transition_params(const Schedule& sched, double s, double t);

struct PosteriorParams {
    double coef_z;   // weight of z_t in the mean
    double coef_x0;  // weight of x0_hat in the mean
    double var;      // Sigma^2
};
PosteriorParams posterior_params(const Schedule& sched, double s, double t);

// Depth domain [0,1] <-> diffusion domain [-1,1].
template <class T>
ten::Tensor<T> to_diffusion_domain(const ten::Tensor<T>& depth) {
    return ten::add_scalar(ten::mul_scalar(depth, T(2)), T(-1));
}
template <class T>
ten::Tensor<T> to_depth_domain(const ten::Tensor<T>& u) {
    return ten::mul_scalar(ten::add_scalar(u, T(1)), T(0.5));
}

// z_t = alpha_t x0 + sigma_t eps
template <class T>
ten::Tensor<T> forward_sample(const ten::Tensor<T>& x0, const SchedulePoint& p,
                              const ten::Tensor<T>& eps) {
    if (x0.shape() != eps.shape())
        throw Error("forward_sample: shape mismatch " + ten::shape_str(x0.shape()) + " vs " +
                    ten::shape_str(eps.shape()));
    std::vector<T> out(x0.numel());
    kern::active<T>().axpby(static_cast<T>(p.alpha), x0.data().data(), static_cast<T>(p.sigma),
                            eps.data().data(), out.data(), x0.numel());
    return ten::Tensor<T>::from(x0.shape(), std::move(out));
}

// x0_hat = (z_t - sigma_t eps_hat) / alpha_t; exact inverse of forward_sample.
template <class T>
ten::Tensor<T> predict_x0(const ten::Tensor<T>& z, const ten::Tensor<T>& eps_hat,
                          const SchedulePoint& p) {
    if (z.shape() != eps_hat.shape())
        throw Error("predict_x0: shape mismatch " + ten::shape_str(z.shape()) + " vs " +
                    ten::shape_str(eps_hat.shape()));
    std::vector<T> out(z.numel());
    T a = static_cast<T>(1.0 / p.alpha);
    T b = static_cast<T>(-p.sigma / p.alpha);
    kern::active<T>().axpby(a, z.data().data(), b, eps_hat.data().data(), out.data(), z.numel());
    ten::ensure_all_finite(out, "predict_x0");
    return ten::Tensor<T>::from(z.shape(), std::move(out));
}

// z' = m ⊙ y + (1 - m) ⊙ z. Differentiable; applied before every denoiser
// call in both training and sampling.
template <class T>
ten::Tensor<T> reinject(const ten::Tensor<T>& z, const ten::Tensor<T>& y_diff,
                        const ten::Tensor<T>& mask) {
    if (z.shape() != y_diff.shape() || z.shape() != mask.shape())
        throw Error("reinject: shape mismatch");
    return ten::add(ten::mul(mask, y_diff),
                    ten::mul(ten::sub_scalar_rev(mask, T(1)), z));
}

// Noise-prediction network interface: (F,2,H,W) input, per-element log-SNR.
using DenoiserFn =
    std::function<ten::Tensor<float>(const ten::Tensor<float>& input, double log_snr)>;

// Eq-style masked training loss at explicit (t, eps): mean squared
// eps-prediction error over unknown pixels, with a guarded denominator.
ten::Tensor<float> masked_loss_at(const ten::Tensor<float>& x0_depth,
                                  const ten::Tensor<float>& y_depth,
                                  const ten::Tensor<float>& mask, const DenoiserFn& denoiser,
                                  const Schedule& sched, double t,
                                  const ten::Tensor<float>& eps);

// Draws t ~ U(0,1) (clamped) and eps ~ N(0, I) from rng, then defers to
// masked_loss_at.
ten::Tensor<float> masked_loss(const ten::Tensor<float>& x0_depth,
                               const ten::Tensor<float>& y_depth, const ten::Tensor<float>& mask,
                               const DenoiserFn& denoiser, const Schedule& sched,
                               rng::Stream& rng);

struct SamplerConfig {
    int steps = 32;          // T
    bool stochastic = true;  // posterior noise on/off
    uint64_t seed = 0;
    Schedule schedule;
};

// Observer invoked right after each re-injection (for invariant checks).
using StepObserver = std::function<void(int step, const ten::Tensor<float>& z)>;

// Ancestral inpainting sampler. y and mask in depth domain, output in depth
// domain with known pixels overwritten by y exactly.
ten::Tensor<float> sample(const ten::Tensor<float>& y_depth, const ten::Tensor<float>& mask,
                          const SamplerConfig& cfg, const DenoiserFn& denoiser,
                          const StepObserver& observer = nullptr);

}  // namespace gsu::diff
