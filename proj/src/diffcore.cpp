#include "gsu/diffcore.hpp"

#include <cmath>

namespace gsu::diff {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SchedulePoint Schedule::at(double t) const {
    double tc = clamp_t(t);
    double alpha = std::cos(kPi * tc / 2.0);
    double sigma = std::sin(kPi * tc / 2.0);
    double log_snr = 2.0 * (std::log(alpha) - std::log(sigma));
    return {tc, alpha, sigma, log_snr};
}

TransitionParams transition_params(const Schedule& sched, double s, double t) {
    double sc = sched.clamp_t(s), tc = sched.clamp_t(t);
    if (sc > tc) throw Error("transition_params: s > t after clamping");
    SchedulePoint ps = sched.at(sc), pt = sched.at(tc);
    double alpha_ts = pt.alpha / ps.alpha;
    double sigma2_ts = pt.sigma * pt.sigma - alpha_ts * alpha_ts * ps.sigma * ps.sigma;
    return {alpha_ts, sigma2_ts};
}

PosteriorParams posterior_params(const Schedule& sched, double s, double t) {
    double sc = sched.clamp_t(s), tc = sched.clamp_t(t);
    if (sc >= tc) throw Error("posterior_params: requires s < t after clamping");
    SchedulePoint ps = sched.at(sc), pt = sched.at(tc);
    TransitionParams tr = transition_params(sched, sc, tc);
    double st2 = pt.sigma * pt.sigma;
    PosteriorParams out;
    out.coef_z = tr.alpha_ts * ps.sigma * ps.sigma / st2;
    out.coef_x0 = ps.alpha * tr.sigma2_ts / st2;
    out.var = tr.sigma2_ts * ps.sigma * ps.sigma / st2;
    return out;
}

ten::Tensor<float> masked_loss_at(const ten::Tensor<float>& x0_depth,
                                  const ten::Tensor<float>& y_depth,
                                  const ten::Tensor<float>& mask, const DenoiserFn& denoiser,
                                  const Schedule& sched, double t,
                                  const ten::Tensor<float>& eps) {
    if (x0_depth.shape() != y_depth.shape() || x0_depth.shape() != mask.shape())
        throw Error("masked_loss: shape mismatch between x0, y and mask");
    SchedulePoint p = sched.at(t);

    auto x0 = to_diffusion_domain(x0_depth);
    auto y = to_diffusion_domain(y_depth);
    auto z = forward_sample(x0, p, eps);
    auto z_in = reinject(z, y, mask);
    auto input = ten::concat2(y, z_in, 1);  // channel axis of (F,1,H,W)

    auto eps_hat = denoiser(input, p.log_snr);
    if (eps_hat.shape() != x0_depth.shape())
        throw Error("masked_loss: denoiser output shape " + ten::shape_str(eps_hat.shape()) +
                    " does not match latent shape " + ten::shape_str(x0_depth.shape()));

    auto unknown = ten::sub_scalar_rev(mask, 1.0f);  // 1 - m
    double denom = 0.0;
    for (float v : unknown.data()) denom += v;
    denom = std::max(1.0, denom);

    auto diff = ten::sub(eps_hat, eps);
    auto sq = ten::mul(diff, diff);
    auto weighted = ten::mul(unknown, sq);
    return ten::div_scalar(ten::sum_all(weighted), static_cast<float>(denom));
}

ten::Tensor<float> masked_loss(const ten::Tensor<float>& x0_depth,
                               const ten::Tensor<float>& y_depth, const ten::Tensor<float>& mask,
                               const DenoiserFn& denoiser, const Schedule& sched,
                               rng::Stream& rng) {
    double t = sched.clamp_t(rng.next_unit());
    std::vector<float> noise(x0_depth.numel());
    for (auto& v : noise) v = rng.next_normal_f();
    auto eps = ten::Tensor<float>::from(x0_depth.shape(), std::move(noise));
    return masked_loss_at(x0_depth, y_depth, mask, denoiser, sched, t, eps);
}

ten::Tensor<float> sample(const ten::Tensor<float>& y_depth, const ten::Tensor<float>& mask,
                          const SamplerConfig& cfg, const DenoiserFn& denoiser,
                          const StepObserver& observer) {
    check(cfg.steps >= 1, "sample: step count must be >= 1");
    if (y_depth.shape() != mask.shape())
        throw Error("sample: y and mask shapes differ");

    ten::NoGradGuard ng;
    const Schedule& sched = cfg.schedule;
    auto y = to_diffusion_domain(y_depth);

    auto init_rng = rng::Stream::of(cfg.seed, "sample", "init");
    std::vector<float> z0(y.numel());
    for (auto& v : z0) v = init_rng.next_normal_f();
    auto z = ten::Tensor<float>::from(y.shape(), std::move(z0));

    ten::Tensor<float> x0_hat;
    const int T = cfg.steps;
    for (int i = T; i >= 1; --i) {
        double t = static_cast<double>(i) / T;
        double s = static_cast<double>(i - 1) / T;
        SchedulePoint pt = sched.at(t);

        z = reinject(z, y, mask);
        if (observer) observer(i, z);

        auto input = ten::concat2(y, z, 1);
        auto eps_hat = denoiser(input, pt.log_snr);
        x0_hat = ten::clamp_values(predict_x0(z, eps_hat, pt), -1.0f, 1.0f);

        if (i > 1) {
            PosteriorParams post = posterior_params(sched, s, t);
            std::vector<float> next(z.numel());
            kern::active<float>().axpby(static_cast<float>(post.coef_z), z.data().data(),
                                        static_cast<float>(post.coef_x0), x0_hat.data().data(),
                                        next.data(), z.numel());
            if (cfg.stochastic) {
                auto step_rng = rng::Stream::of(cfg.seed, "sample", "step", i);
                float sd = static_cast<float>(std::sqrt(post.var));
                for (auto& v : next) v += sd * step_rng.next_normal_f();
            }
            z = ten::Tensor<float>::from(z.shape(), std::move(next));
        }
    }

    auto out_depth = clamp_values(to_depth_domain(x0_hat), 0.0f, 1.0f);
    // Known pixels come straight from y.
    std::vector<float> out(out_depth.numel());
    kern::active<float>().lerp_mask(mask.data().data(), y_depth.data().data(),
                                    out_depth.data().data(), out.data(), out_depth.numel());
    return ten::Tensor<float>::from(out_depth.shape(), std::move(out));
}

}  // namespace gsu::diff
