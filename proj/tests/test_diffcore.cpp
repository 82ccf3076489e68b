#include <doctest.h>

#include <cmath>
#include <cstring>

#include "gsu/diffcore.hpp"
#include "gsu/prng.hpp"

using namespace gsu;
using ten::Tensor;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Recover t from the log-SNR conditioning: alpha/sigma = cot(pi t / 2).
double t_from_log_snr(double log_snr) {
    return (2.0 / kPi) * std::atan(std::exp(-log_snr / 2.0));
}

Tensor<float> channel_of(const Tensor<float>& input, int64_t ch) {
    const int64_t F = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    std::vector<float> out(F * H * W);
    for (int64_t f = 0; f < F; ++f)
        std::memcpy(out.data() + f * H * W,
                    input.data().data() + (f * C + ch) * H * W, H * W * 4);
    return Tensor<float>::from({F, 1, H, W}, std::move(out));
}

// Denoiser that knows the true clean video: eps = (z - alpha x0) / sigma.
diff::DenoiserFn oracle_denoiser(const Tensor<float>& x0_diff, const diff::Schedule& sched) {
    return [x0_diff, sched](const Tensor<float>& input, double log_snr) {
        auto p = sched.at(t_from_log_snr(log_snr));
        auto z = channel_of(input, 1);
        std::vector<float> eps(z.numel());
        const float* pz = z.data().data();
        const float* px = x0_diff.data().data();
        for (int64_t i = 0; i < z.numel(); ++i)
            eps[i] = static_cast<float>((pz[i] - p.alpha * px[i]) / p.sigma);
        return Tensor<float>::from(z.shape(), std::move(eps));
    };
}

Tensor<float> randn_f(ten::Shape shape, uint64_t seed) {
    auto rng = rng::Stream::of(seed, "dc");
    std::vector<float> v(ten::numel_of(shape));
    for (auto& x : v) x = rng.next_normal_f();
    return Tensor<float>::from(std::move(shape), std::move(v));
}

Tensor<float> rand_depth(ten::Shape shape, uint64_t seed) {
    auto rng = rng::Stream::of(seed, "depth");
    std::vector<float> v(ten::numel_of(shape));
    for (auto& x : v)
        x = rng.next_unit() < 0.4 ? 0.0f
                                  : static_cast<float>(1.0 / 255.0 + (254.0 / 255.0) * rng.next_unit());
    return Tensor<float>::from(std::move(shape), std::move(v));
}

Tensor<float> mask_of(const Tensor<float>& y) {
    std::vector<float> m(y.numel());
    for (int64_t i = 0; i < y.numel(); ++i) m[i] = y.data()[i] > 0 ? 1.0f : 0.0f;
    return Tensor<float>::from(y.shape(), std::move(m));
}

}  // namespace

TEST_CASE("schedule symmetry point and small-t limit") {
    diff::Schedule sched;
    auto mid = sched.at(0.5);
    CHECK(mid.alpha == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(mid.sigma == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(mid.log_snr == doctest::Approx(0.0).epsilon(1e-12));

    auto lo = sched.at(0.0);  // clamps to t_min
    CHECK(lo.t == sched.t_min);
    CHECK(lo.alpha == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lo.sigma == doctest::Approx(kPi * sched.t_min / 2).epsilon(1e-6));
    CHECK(lo.log_snr > 10.0);
}

TEST_CASE("variance preservation over a 1000-point grid") {
    diff::Schedule sched;
    double prev_lambda = std::numeric_limits<double>::infinity();
    double prev_t = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        double t = static_cast<double>(i) / 1000.0;
        auto p = sched.at(t);
        CHECK(std::abs(p.alpha * p.alpha + p.sigma * p.sigma - 1.0) < 1e-12);
        double lambda = std::exp(p.log_snr);
        if (p.t > prev_t && prev_t >= 0) CHECK(lambda < prev_lambda);  // strictly decreasing
        prev_lambda = lambda;
        prev_t = p.t;
    }
}

TEST_CASE("forward_sample with zero noise scales by alpha") {
    diff::Schedule sched;
    auto x0 = randn_f({2, 1, 4, 4}, 1);
    auto eps = Tensor<float>::zeros(x0.shape());
    auto p = sched.at(0.3);
    auto z = diff::forward_sample(x0, p, eps);
    for (int64_t i = 0; i < z.numel(); ++i)
        CHECK(z.data()[i] == doctest::Approx(p.alpha * x0.data()[i]).epsilon(1e-6));
}

TEST_CASE("forward_sample at t_min is close to x0") {
    diff::Schedule sched;
    auto x0 = randn_f({1, 1, 4, 4}, 2);
    auto eps = randn_f({1, 1, 4, 4}, 3);
    auto p = sched.at(0.0);
    auto z = diff::forward_sample(x0, p, eps);
    double max_eps = 0, max_x0 = 0, max_dev = 0;
    for (int64_t i = 0; i < z.numel(); ++i) {
        max_eps = std::max(max_eps, std::abs((double)eps.data()[i]));
        max_x0 = std::max(max_x0, std::abs((double)x0.data()[i]));
        max_dev = std::max(max_dev, std::abs((double)z.data()[i] - x0.data()[i]));
    }
    CHECK(max_dev <= p.sigma * max_eps + (1.0 - p.alpha) * max_x0 + 1e-6);
}

TEST_CASE("forward_sample empirical moments match the marginal (Monte Carlo oracle)") {
    diff::Schedule sched;
    auto p = sched.at(0.5);
    const double x0 = 0.7;
    const int n = 10000;
    auto rng = rng::Stream::of(17, "mc");
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double z = p.alpha * x0 + p.sigma * rng.next_normal();
        sum += z;
        sumsq += z * z;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double se_mean = p.sigma / std::sqrt((double)n);
    double se_var = p.sigma * p.sigma * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(mean - p.alpha * x0) < 4 * se_mean);
    CHECK(std::abs(var - p.sigma * p.sigma) < 4 * se_var);
}

TEST_CASE("transition parameters: identity at s == t and exact algebra on a grid") {
    diff::Schedule sched;
    auto id = diff::transition_params(sched, 0.4, 0.4);
    CHECK(id.alpha_ts == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(id.sigma2_ts == doctest::Approx(0.0).epsilon(1e-12));

    for (int i = 0; i <= 30; ++i)
        for (int j = i; j <= 30; ++j) {
            double s = i / 30.0, t = j / 30.0;
            auto ps = sched.at(s);
            auto pt = sched.at(t);
            auto tr = diff::transition_params(sched, s, t);
            CHECK(std::abs(tr.alpha_ts * ps.alpha - pt.alpha) < 1e-12);
            CHECK(std::abs(tr.alpha_ts * tr.alpha_ts * ps.sigma * ps.sigma + tr.sigma2_ts -
                           pt.sigma * pt.sigma) < 1e-12);
        }
    CHECK_THROWS_AS(diff::transition_params(sched, 0.6, 0.4), Error);
}

TEST_CASE("Markov composition 0.25 -> 0.5 -> 0.75 matches the direct marginal") {
    diff::Schedule sched;
    const double x0 = -0.35;
    auto t1 = diff::transition_params(sched, 0.25, 0.5);
    auto t2 = diff::transition_params(sched, 0.5, 0.75);
    auto ps = sched.at(0.25);
    auto pt = sched.at(0.75);
    const int n = 10000;
    auto rng = rng::Stream::of(23, "markov");
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double zs = ps.alpha * x0 + ps.sigma * rng.next_normal();
        double zu = t1.alpha_ts * zs + std::sqrt(t1.sigma2_ts) * rng.next_normal();
        double zt = t2.alpha_ts * zu + std::sqrt(t2.sigma2_ts) * rng.next_normal();
        sum += zt;
        sumsq += zt * zt;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - pt.alpha * x0) < 4 * pt.sigma / std::sqrt((double)n));
    CHECK(std::abs(var - pt.sigma * pt.sigma) <
          4 * pt.sigma * pt.sigma * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("posterior coefficients against a 1-D conjugate-Gaussian oracle") {
    diff::Schedule sched;
    for (auto [s, t] : std::vector<std::pair<double, double>>{{0.1, 0.3}, {0.25, 0.75}, {0.5, 0.9}}) {
        auto post = diff::posterior_params(sched, s, t);
        auto ps = sched.at(s);
        auto pt = sched.at(t);
        auto tr = diff::transition_params(sched, s, t);
        // Joint over (z_s, z_t) given x0: Var(z_s)=sigma_s^2,
        // Cov = alpha_{t|s} sigma_s^2, Var(z_t) = sigma_t^2. Condition on z_t.
        double cov = tr.alpha_ts * ps.sigma * ps.sigma;
        double var_t = pt.sigma * pt.sigma;
        double gain = cov / var_t;
        double coef_z = gain;
        double coef_x0 = ps.alpha - gain * pt.alpha;
        double var = ps.sigma * ps.sigma - gain * cov;
        CHECK(std::abs(post.coef_z - coef_z) < 1e-12);
        CHECK(std::abs(post.coef_x0 - coef_x0) < 1e-12);
        CHECK(std::abs(post.var - var) < 1e-12);
    }
    CHECK_THROWS_AS(diff::posterior_params(sched, 0.5, 0.5), Error);
}

TEST_CASE("posterior degenerates to z_t as s -> t") {
    diff::Schedule sched;
    auto post = diff::posterior_params(sched, 0.5 - 1e-9, 0.5);
    CHECK(post.coef_z == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(post.coef_x0 == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(post.var == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("posterior mean with exact x0 and zero noise is alpha_s x0") {
    diff::Schedule sched;
    double s = 0.3, t = 0.7, x0 = 0.42;
    auto ps = sched.at(s);
    auto pt = sched.at(t);
    auto post = diff::posterior_params(sched, s, t);
    double z_t = pt.alpha * x0;  // forward with eps = 0
    double mu = post.coef_z * z_t + post.coef_x0 * x0;
    CHECK(std::abs(mu - ps.alpha * x0) < 1e-12);
}

TEST_CASE("predict_x0 inverts forward_sample") {
    diff::Schedule sched;
    auto x0 = randn_f({2, 1, 4, 4}, 5);
    auto eps = randn_f({2, 1, 4, 4}, 6);
    auto p = sched.at(0.63);
    auto z = diff::forward_sample(x0, p, eps);
    auto back = diff::predict_x0(z, eps, p);
    for (int64_t i = 0; i < x0.numel(); ++i)
        CHECK(std::abs(back.data()[i] - x0.data()[i]) < 1e-5);

    // zero-signal case: eps_hat = z / sigma -> x0_hat = 0
    std::vector<float> eh(z.numel());
    for (int64_t i = 0; i < z.numel(); ++i) eh[i] = static_cast<float>(z.data()[i] / p.sigma);
    auto x0_hat = diff::predict_x0(z, Tensor<float>::from(z.shape(), std::move(eh)), p);
    for (int64_t i = 0; i < x0_hat.numel(); ++i) CHECK(std::abs(x0_hat.data()[i]) < 1e-5);
}

TEST_CASE("predict_x0 in 64-bit agrees with an independent re-evaluation below 1e-10") {
    diff::Schedule sched;
    auto rngz = rng::Stream::of(31, "z");
    std::vector<double> zv(64), ev(64);
    for (auto& v : zv) v = rngz.next_normal();
    for (auto& v : ev) v = rngz.next_normal();
    auto z = Tensor<double>::from({64}, std::vector<double>(zv));
    auto eh = Tensor<double>::from({64}, std::vector<double>(ev));
    auto p = sched.at(0.37);
    auto got = diff::predict_x0(z, eh, p);
    for (int64_t i = 0; i < 64; ++i) {
        double expect = zv[i] / p.alpha - (p.sigma / p.alpha) * ev[i];
        CHECK(std::abs(got.data()[i] - expect) < 1e-10);
    }
}

TEST_CASE("reinject pins known pixels exactly") {
    auto z = randn_f({1, 1, 2, 2}, 8);
    auto y = randn_f({1, 1, 2, 2}, 9);
    auto ones = Tensor<float>::ones({1, 1, 2, 2});
    auto zeros = Tensor<float>::zeros({1, 1, 2, 2});
    CHECK(diff::reinject(z, y, ones).data()[2] == y.data()[2]);
    CHECK(diff::reinject(z, y, zeros).data()[2] == z.data()[2]);

    auto m = Tensor<float>::from({1, 1, 2, 2}, {1, 0, 0, 1});
    auto zp = diff::reinject(z, y, m);
    CHECK(zp.data()[0] == y.data()[0]);
    CHECK(zp.data()[3] == y.data()[3]);
    CHECK(zp.data()[1] == z.data()[1]);
}

TEST_CASE("masked loss is zero for the oracle denoiser and for all-ones masks") {
    diff::Schedule sched;
    auto x0 = rand_depth({2, 1, 8, 8}, 10);
    auto y = x0;  // undegraded
    auto m = mask_of(y);
    auto oracle = oracle_denoiser(diff::to_diffusion_domain(x0), sched);
    auto eps = randn_f(x0.shape(), 11);
    auto loss = diff::masked_loss_at(x0, y, m, oracle, sched, 0.44, eps);
    CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-8));

    // all-ones mask: empty unknown region, guarded denominator
    auto ones = Tensor<float>::ones(x0.shape());
    auto junk = [](const Tensor<float>& input, double) {
        return Tensor<float>::full({input.dim(0), 1, input.dim(2), input.dim(3)}, 0.37f);
    };
    auto loss2 = diff::masked_loss_at(x0, y, ones, junk, sched, 0.5, eps);
    CHECK(loss2.item() == 0.0f);
}

TEST_CASE("masked loss matches hand arithmetic on a 2x2 toy") {
    diff::Schedule sched;
    auto x0 = Tensor<float>::from({1, 1, 2, 2}, {0.5f, 0.8f, 0.4f, 0.0f});
    auto y = Tensor<float>::from({1, 1, 2, 2}, {0.5f, 0.0f, 0.4f, 0.0f});
    auto m = mask_of(y);  // 1,0,1,0
    double t = 0.36;
    auto eps = Tensor<float>::from({1, 1, 2, 2}, {0.3f, -0.7f, 1.1f, 0.25f});
    auto constant = [](const Tensor<float>& input, double) {
        return Tensor<float>::full({input.dim(0), 1, input.dim(2), input.dim(3)}, 0.2f);
    };
    auto loss = diff::masked_loss_at(x0, y, m, constant, sched, t, eps);
    double expect = (std::pow(0.2 - (-0.7), 2) + std::pow(0.2 - 0.25, 2)) / 2.0;
    CHECK(loss.item() == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("masked loss rejects denoisers with the wrong output shape") {
    diff::Schedule sched;
    auto x0 = rand_depth({1, 1, 4, 4}, 12);
    auto m = mask_of(x0);
    auto bad = [](const Tensor<float>& input, double) {
        return Tensor<float>::zeros({input.dim(0), 1, 2, 2});
    };
    auto eps = randn_f(x0.shape(), 13);
    CHECK_THROWS_AS(diff::masked_loss_at(x0, x0, m, bad, sched, 0.5, eps), Error);
}

TEST_CASE("sampler returns y exactly when the mask is all ones") {
    auto y = rand_depth({2, 1, 8, 8}, 20);
    auto ones = Tensor<float>::ones(y.shape());
    diff::SamplerConfig cfg;
    cfg.steps = 4;
    cfg.seed = 3;
    auto junk = [](const Tensor<float>& input, double) {
        return Tensor<float>::zeros({input.dim(0), 1, input.dim(2), input.dim(3)});
    };
    auto out = diff::sample(y, ones, cfg, junk);
    CHECK(std::memcmp(out.data().data(), y.data().data(), y.numel() * 4) == 0);
}

TEST_CASE("oracle denoiser reproduces x0 for every T in the sweep") {
    diff::Schedule sched;
    auto x0 = rand_depth({2, 1, 8, 8}, 21);
    // degrade: knock out half the pixels
    std::vector<float> yv(x0.data().begin(), x0.data().end());
    for (size_t i = 0; i < yv.size(); i += 2) yv[i] = 0.0f;
    auto y = Tensor<float>::from(x0.shape(), std::move(yv));
    auto m = mask_of(y);
    auto oracle = oracle_denoiser(diff::to_diffusion_domain(x0), sched);

    for (int T : {1, 2, 4, 8, 16, 32}) {
        diff::SamplerConfig cfg;
        cfg.steps = T;
        cfg.stochastic = false;
        cfg.seed = 5;
        cfg.schedule = sched;
        auto out = diff::sample(y, m, cfg, oracle);
        double max_abs = 0;
        for (int64_t i = 0; i < out.numel(); ++i)
            max_abs = std::max(max_abs, std::abs((double)out.data()[i] - x0.data()[i]));
        CHECK(max_abs < 1e-4);
    }
}

TEST_CASE("known pixels stay pinned after every re-injection") {
    diff::Schedule sched;
    auto x0 = rand_depth({1, 1, 8, 8}, 22);
    std::vector<float> yv(x0.data().begin(), x0.data().end());
    for (size_t i = 0; i < yv.size(); i += 3) yv[i] = 0.0f;
    auto y = Tensor<float>::from(x0.shape(), std::move(yv));
    auto m = mask_of(y);
    auto y_diff = diff::to_diffusion_domain(y);
    auto oracle = oracle_denoiser(diff::to_diffusion_domain(x0), sched);

    diff::SamplerConfig cfg;
    cfg.steps = 8;
    cfg.seed = 9;
    int observed = 0;
    auto out = diff::sample(y, m, cfg, oracle, [&](int, const Tensor<float>& z) {
        ++observed;
        for (int64_t i = 0; i < z.numel(); ++i)
            if (m.data()[i] == 1.0f) CHECK(z.data()[i] == y_diff.data()[i]);
    });
    CHECK(observed == 8);
    // final output pins known pixels in depth domain
    for (int64_t i = 0; i < out.numel(); ++i)
        if (m.data()[i] == 1.0f) CHECK(out.data()[i] == y.data()[i]);
}

TEST_CASE("sampling is deterministic given identical inputs and seed") {
    diff::Schedule sched;
    auto x0 = rand_depth({2, 1, 8, 8}, 23);
    auto m = mask_of(x0);
    auto oracle = oracle_denoiser(diff::to_diffusion_domain(x0), sched);
    diff::SamplerConfig cfg;
    cfg.steps = 16;
    cfg.stochastic = true;
    cfg.seed = 77;
    auto a = diff::sample(x0, m, cfg, oracle);
    auto b = diff::sample(x0, m, cfg, oracle);
    CHECK(std::memcmp(a.data().data(), b.data().data(), a.numel() * 4) == 0);
}

TEST_CASE("sampler surfaces numeric failures from the denoiser path") {
    auto y = rand_depth({1, 1, 4, 4}, 24);
    auto m = mask_of(y);
    auto explosive = [](const Tensor<float>& input, double) {
        return Tensor<float>::full({input.dim(0), 1, input.dim(2), input.dim(3)}, 1e38f);
    };
    diff::SamplerConfig cfg;
    cfg.steps = 2;
    CHECK_THROWS_AS(diff::sample(y, m, cfg, explosive), NumericError);
    diff::SamplerConfig bad;
    bad.steps = 0;
    CHECK_THROWS_AS(diff::sample(y, m, bad, explosive), Error);
}
