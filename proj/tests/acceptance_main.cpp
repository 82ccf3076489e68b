// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gsu/degrade.hpp"
#include "gsu/denoiser.hpp"
#include "gsu/diffcore.hpp"
#include "gsu/evalkit.hpp"
#include "gsu/gaitgeom.hpp"
#include "gsu/gradcheck.hpp"
#include "gsu/gsu1.hpp"
#include "gsu/prng.hpp"
#include "gsu/synthgait.hpp"
#include "gsu/trainkit.hpp"

using namespace gsu;
using ten::Tensor;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << what;
        }
    }
    void note(const std::string& s) {
        detail << (detail.str().empty() ? "" : "; ") << s;
    }
};

double t_from_log_snr(double log_snr) {
    return (2.0 / kPi) * std::atan(std::exp(-log_snr / 2.0));
}

Tensor<float> channel_of(const Tensor<float>& input, int64_t ch) {
    const int64_t F = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    std::vector<float> out(F * H * W);
    for (int64_t f = 0; f < F; ++f)
        std::memcpy(out.data() + f * H * W, input.data().data() + (f * C + ch) * H * W,
                    H * W * 4);
    return Tensor<float>::from({F, 1, H, W}, std::move(out));
}

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

Tensor<float> video_tensor(const geom::DepthVideo& v) {
    return Tensor<float>::from({v.frames, 1, v.height, v.width},
                               std::vector<float>(v.data.begin(), v.data.end()));
}

Tensor<float> mask_tensor(const degrade::MaskVideo& m) {
    std::vector<float> data(m.data.size());
    for (size_t i = 0; i < m.data.size(); ++i) data[i] = static_cast<float>(m.data[i]);
    return Tensor<float>::from({m.frames, 1, m.height, m.width}, std::move(data));
}

geom::DepthVideo video_from_tensor(const Tensor<float>& t, const geom::DepthVideo& like) {
    geom::DepthVideo v = like;
    std::copy(t.data().begin(), t.data().end(), v.data.begin());
    return v;
}

// ---------------------------------------------------------------------------

void criterion1_schedule_algebra(Check& c) {
    diff::Schedule sched;
    double worst_vp = 0, worst_a = 0, worst_s = 0;
    double prev_lambda = std::numeric_limits<double>::infinity();
    double prev_t = -1;
    bool monotone = true;
    for (int i = 0; i <= 1000; ++i) {
        double t = i / 1000.0;
        auto p = sched.at(t);
        worst_vp = std::max(worst_vp, std::abs(p.alpha * p.alpha + p.sigma * p.sigma - 1.0));
        double lambda = std::exp(p.log_snr);
        if (prev_t >= 0 && p.t > prev_t && lambda >= prev_lambda) monotone = false;
        prev_lambda = lambda;
        prev_t = p.t;
    }
    for (int i = 0; i <= 1000; ++i)
        for (int j = i; j <= 1000; j += 37) {
            double s = i / 1000.0, t = j / 1000.0;
            auto ps = sched.at(s);
            auto pt = sched.at(t);
            auto tr = diff::transition_params(sched, s, t);
            worst_a = std::max(worst_a, std::abs(tr.alpha_ts * ps.alpha - pt.alpha));
            worst_s = std::max(worst_s,
                               std::abs(tr.alpha_ts * tr.alpha_ts * ps.sigma * ps.sigma +
                                        tr.sigma2_ts - pt.sigma * pt.sigma));
        }
    c.expect(worst_vp < 1e-12, "variance preservation above 1e-12");
    c.expect(worst_a < 1e-12, "alpha transition identity above 1e-12");
    c.expect(worst_s < 1e-12, "sigma transition identity above 1e-12");
    c.expect(monotone, "lambda not strictly decreasing");
}

void criterion2_forward_statistics(Check& c) {
    diff::Schedule sched;
    const double x0 = 0.7;
    const int n = 10000;
    for (double t : {0.1, 0.5, 0.9}) {
        auto p = sched.at(t);
        auto rng = rng::Stream::of(2024, "c2", static_cast<int64_t>(t * 1000));
        double sum = 0, sumsq = 0;
        for (int i = 0; i < n; ++i) {
            std::vector<float> noise = {rng.next_normal_f()};
            auto z = diff::forward_sample(Tensor<float>::from({1}, {(float)x0}), p,
                                          Tensor<float>::from({1}, std::move(noise)));
            double v = z.data()[0];
            sum += v;
            sumsq += v * v;
        }
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        double se_mean = p.sigma / std::sqrt((double)n);
        double se_var = p.sigma * p.sigma * std::sqrt(2.0 / (n - 1));
        std::ostringstream what;
        what << "t=" << t;
        c.expect(std::abs(mean - p.alpha * x0) < 4 * se_mean, "mean off at " + what.str());
        c.expect(std::abs(var - p.sigma * p.sigma) < 4 * se_var, "variance off at " + what.str());
    }
}

void criterion3_gradcheck(Check& c) {
    net::DenoiserSpec spec;
    spec.base_channels = 8;
    spec.max_frames = 4;
    auto d = net::init_denoiser<double>(spec, 404);
    auto fill = rng::Stream::of(405, "fill");
    for (auto& [name, t] : d.params.items)
        for (auto& v : t.data()) v = 0.15 * fill.next_normal();

    auto fn = [&d](std::vector<Tensor<double>>& in) {
        auto out = d.forward(in[0], 0.8);
        auto rng = rng::Stream::of(406, "w", out.numel());
        std::vector<double> w(out.numel());
        for (auto& v : w) v = rng.next_normal();
        return ten::sum_all(ten::mul(out, Tensor<double>::from(out.shape(), std::move(w))));
    };

    auto in_rng = rng::Stream::of(407, "x");
    std::vector<double> xv(4 * 2 * 8 * 8);
    for (auto& v : xv) v = in_rng.next_normal();

    auto report = ten::gradcheck(fn, {Tensor<double>::from({4, 2, 8, 8}, std::move(xv))}, 1e-5,
                                 1e-4, -1, 0);
    std::ostringstream msg;
    msg << "input gradcheck worst rel err " << report.max_rel_err;
    c.note(msg.str());
    c.expect(report.pass, "input gradients exceed 1e-4 relative error");

    // sampled parameter gradients through the same loss at a fixed input
    std::vector<Tensor<double>> leaves;
    for (auto& [name, t] : d.params.items) leaves.push_back(t);
    auto in_fixed_rng = rng::Stream::of(407, "x");
    std::vector<double> x_fixed(4 * 2 * 8 * 8);
    for (auto& v : x_fixed) v = in_fixed_rng.next_normal();
    auto x_const = Tensor<double>::from({4, 2, 8, 8}, std::move(x_fixed));
    auto fnp = [&](std::vector<Tensor<double>>&) {
        auto out = d.forward(x_const, 0.8);
        auto rng = rng::Stream::of(406, "w", out.numel());
        std::vector<double> w(out.numel());
        for (auto& v : w) v = rng.next_normal();
        return ten::sum_all(ten::mul(out, Tensor<double>::from(out.shape(), std::move(w))));
    };
    auto preport = ten::gradcheck(fnp, leaves, 1e-5, 1e-4, 3, 408);
    std::ostringstream msg2;
    msg2 << "param gradcheck worst rel err " << preport.max_rel_err;
    c.note(msg2.str());
    c.expect(preport.pass, "parameter gradients exceed 1e-4 relative error");
}

void criterion4_oracle_exactness(Check& c) {
    diff::Schedule sched;
    auto rng = rng::Stream::of(4096, "c4");
    std::vector<float> xv(2 * 1 * 16 * 16);
    for (auto& v : xv)
        v = rng.next_unit() < 0.4 ? 0.0f
                                  : static_cast<float>(1.0 / 255 + (254.0 / 255) * rng.next_unit());
    auto x0 = Tensor<float>::from({2, 1, 16, 16}, std::move(xv));
    std::vector<float> yv(x0.data().begin(), x0.data().end());
    for (size_t i = 0; i < yv.size(); i += 2) yv[i] = 0.0f;
    auto y = Tensor<float>::from(x0.shape(), std::move(yv));
    std::vector<float> mv(y.numel());
    for (int64_t i = 0; i < y.numel(); ++i) mv[i] = y.data()[i] > 0 ? 1.0f : 0.0f;
    auto m = Tensor<float>::from(y.shape(), std::move(mv));
    auto oracle = oracle_denoiser(diff::to_diffusion_domain(x0), sched);

    for (int T : {1, 2, 4, 8, 16, 32}) {
        diff::SamplerConfig cfg;
        cfg.steps = T;
        cfg.stochastic = false;
        cfg.seed = 11;
        cfg.schedule = sched;
        auto out = diff::sample(y, m, cfg, oracle);
        double max_abs = 0;
        for (int64_t i = 0; i < out.numel(); ++i)
            max_abs = std::max(max_abs, std::abs((double)out.data()[i] - x0.data()[i]));
        std::ostringstream what;
        what << "T=" << T << " max abs err " << max_abs;
        if (T == 1 || T == 32) c.note(what.str());
        c.expect(max_abs < 1e-4, what.str() + " above 1e-4");
    }
}

void criterion5_conditioning(Check& c) {
    diff::Schedule sched;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        auto rng = rng::Stream::of(seed, "c5");
        std::vector<float> yv(3 * 8 * 8);
        for (auto& v : yv)
            v = rng.next_unit() < 0.5
                    ? 0.0f
                    : static_cast<float>(1.0 / 255 + (254.0 / 255) * rng.next_unit());
        auto y = Tensor<float>::from({3, 1, 8, 8}, std::move(yv));
        std::vector<float> mv(y.numel());
        for (int64_t i = 0; i < y.numel(); ++i) mv[i] = y.data()[i] > 0 ? 1.0f : 0.0f;
        auto m = Tensor<float>::from(y.shape(), std::move(mv));

        auto zero_net = [](const Tensor<float>& input, double) {
            return Tensor<float>::zeros({input.dim(0), 1, input.dim(2), input.dim(3)});
        };
        diff::SamplerConfig cfg;
        cfg.steps = 8;
        cfg.stochastic = true;
        cfg.seed = seed;
        auto out = diff::sample(y, m, cfg, zero_net);
        for (int64_t i = 0; i < out.numel(); ++i)
            if (m.data()[i] == 1.0f && out.data()[i] != y.data()[i]) {
                c.expect(false, "sampled output does not pin a known pixel");
                break;
            }

        auto ones = Tensor<float>::ones(y.shape());
        auto eps_rng = rng::Stream::of(seed, "c5eps");
        std::vector<float> ev(y.numel());
        for (auto& v : ev) v = eps_rng.next_normal_f();
        auto loss = diff::masked_loss_at(y, y, ones, zero_net, sched, 0.5,
                                         Tensor<float>::from(y.shape(), std::move(ev)));
        c.expect(loss.item() == 0.0f, "all-ones mask loss is not exactly zero");
    }
}

void criterion6_projection_roundtrip(Check& c) {
    geom::ProjectionConfig cfg;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto spec = synth::random_walker(seed, static_cast<int>(seed % 9), 0, 2);
        auto seq = synth::generate(spec, 2);
        auto v1 = geom::project(geom::canonicalize(seq), cfg);
        auto v2 = geom::project(geom::unproject_canonical(v1, cfg), cfg);
        bool stable = v1.data.size() == v2.data.size() &&
                      std::memcmp(v1.data.data(), v2.data.data(), v1.data.size() * 4) == 0;
        c.expect(stable, "round trip not bit-stable at seed " + std::to_string(seed));

        auto canon = geom::canonicalize(seq);
        auto pr = rng::Stream::of(seed, "iso");
        for (int k = 0; k < 200; ++k) {
            size_t i = pr.next_below(seq.frames[0].size());
            size_t j = pr.next_below(seq.frames[0].size());
            auto dist = [](const geom::Point3& a, const geom::Point3& b) {
                double dx = (double)a[0] - b[0], dy = (double)a[1] - b[1],
                       dz = (double)a[2] - b[2];
                return std::sqrt(dx * dx + dy * dy + dz * dz);
            };
            double da = dist(seq.frames[0][i], seq.frames[0][j]);
            double db = dist(canon.points.frames[0][i], canon.points.frames[0][j]);
            if (std::abs(da - db) > 1e-6 * std::max(1.0, da)) {
                c.expect(false, "isometry violated beyond 1e-6 relative");
                break;
            }
        }
    }
}

void criterion7_end_to_end(Check& c) {
    const int64_t size = 32;
    const int frames_train = 12, frames_eval = 4;
    geom::ProjectionConfig cfg = geom::ProjectionConfig::square(size);

    // training set: 8 walkers
    std::vector<geom::DepthVideo> train_set;
    for (int s = 0; s < 8; ++s) {
        auto spec = synth::random_walker(701, s, 0, frames_train);
        train_set.push_back(geom::project(geom::canonicalize(synth::generate(spec, frames_train)), cfg));
    }
    // held-out walkers
    std::vector<geom::DepthVideo> test_set;
    for (int s = 0; s < 4; ++s) {
        auto spec = synth::random_walker(900, s, 0, frames_eval);
        test_set.push_back(geom::project(geom::canonicalize(synth::generate(spec, frames_eval)), cfg));
    }

    net::DenoiserSpec spec;
    spec.base_channels = 16;
    spec.max_frames = frames_eval;
    auto state = train::init_trainer(spec, 7001);

    train::TrainConfig tc;
    tc.iterations = 2200;
    tc.batch_size = 4;
    tc.frames = frames_eval;
    tc.seed = 7002;
    train::train(state, train_set, tc);

    auto fn = train::ema_denoiser(state);

    double psnr_model = 0, psnr_bicubic = 0, cons_video = 0, cons_image = 0;
    for (size_t i = 0; i < test_set.size(); ++i) {
        const auto& clean = test_set[i];
        degrade::MaskRecipe recipe{2, 1.0 / 6.0, 9000 + i};
        auto degraded = degrade::compose_and_apply(clean, recipe);
        auto obs = degrade::observation_mask(degraded.y);

        diff::SamplerConfig sc;
        sc.steps = 32;
        sc.stochastic = true;
        sc.seed = 9100 + i;
        auto out_t = diff::sample(video_tensor(degraded.y), mask_tensor(obs), sc, fn);
        auto video_out = video_from_tensor(out_t, clean);

        // image-mode ablation: each frame sampled independently
        geom::DepthVideo image_out = clean;
        int64_t plane = size * size;
        for (int64_t f = 0; f < clean.frames; ++f) {
            geom::DepthVideo yf;
            yf.frames = 1;
            yf.height = yf.width = size;
            yf.data.assign(degraded.y.data.begin() + f * plane,
                           degraded.y.data.begin() + (f + 1) * plane);
            yf.meta = {clean.meta[f]};
            degrade::MaskVideo mf{1, size, size,
                                  {obs.data.begin() + f * plane, obs.data.begin() + (f + 1) * plane}};
            diff::SamplerConfig scf = sc;
            scf.seed = rng::Stream::of(9200 + i, f).next_u64();
            auto of = diff::sample(video_tensor(yf), mask_tensor(mf), scf, fn);
            std::copy(of.data().begin(), of.data().end(), image_out.data.begin() + f * plane);
        }

        auto bicubic = eval::interpolate_baseline(degraded.y, obs, eval::Interp::Bicubic);

        psnr_model += eval::psnr(video_out, clean) / test_set.size();
        psnr_bicubic += eval::psnr(bicubic, clean) / test_set.size();
        cons_video += eval::consistency(video_out, clean) / test_set.size();
        cons_image += eval::consistency(image_out, clean) / test_set.size();
    }

    std::ostringstream msg;
    msg << "PSNR model " << psnr_model << " dB vs bicubic " << psnr_bicubic
        << " dB; consistency video " << cons_video << " vs image-mode " << cons_image;
    c.note(msg.str());
    c.expect(psnr_model >= psnr_bicubic + 1.0, "model PSNR not 1 dB above bicubic");
    c.expect(cons_video < cons_image, "video-mode consistency not below image-mode");
}

void criterion8_metric_sanity(Check& c) {
    geom::DepthVideo a;
    a.frames = 2;
    a.height = a.width = 16;
    a.data.assign(a.pixel_count(), 0.0f);
    a.meta.assign(2, {});
    auto rng = rng::Stream::of(801, "c8");
    for (auto& v : a.data) v = static_cast<float>(rng.next_unit());

    c.expect(std::isinf(eval::psnr(a, a)), "psnr(a,a) not the +inf sentinel");
    c.expect(std::abs(eval::ssim(a, a) - 1.0) < 1e-12, "ssim(a,a) != 1");
    c.expect(eval::consistency(a, a) == 0.0, "consistency(a,a) != 0");

    auto b = a;
    for (auto& v : b.data) v += 0.1f;
    double p = eval::psnr(b, a);
    c.expect(std::abs(p - 20.0) < 0.01, "uniform 0.1 error PSNR not 20 dB");

    const int64_t H = 16, W = 16;
    geom::DepthVideo ramp;
    ramp.frames = 1;
    ramp.height = H;
    ramp.width = W;
    ramp.data.assign(H * W, 0.0f);
    ramp.meta.assign(1, {});
    for (int64_t h = 0; h < H; ++h)
        for (int64_t w = 0; w < W; ++w) ramp.data[h * W + w] = 0.1f + 0.05f * h;
    auto vm = degrade::make_vertical_mask(1, H, W, 2);
    auto y = ramp;
    for (int64_t i = 0; i < y.pixel_count(); ++i)
        if (!vm.data[i]) y.data[i] = 0.0f;
    auto out = eval::interpolate_baseline(y, vm, eval::Interp::Bilinear);
    double worst = 0;
    for (int64_t i = 0; i < out.pixel_count(); ++i)
        worst = std::max(worst, std::abs((double)out.data[i] - ramp.data[i]));
    c.expect(worst < 1e-6, "bilinear does not reconstruct the vertical ramp");
}

void criterion9_reproducibility(Check& c) {
    const char* bin = std::getenv("GSU_BIN");
    std::string gsu = bin ? bin : "./gsu";
    auto base = fs::temp_directory_path() / "gsu_accept9";
    fs::remove_all(base);

    auto run_pipeline = [&](const std::string& tag) {
        fs::path root = base / tag;
        fs::create_directories(root);
        auto sh = [&](const std::string& cmd) {
            std::string full = gsu + " " + cmd + " > /dev/null 2>&1";
            return std::system(full.c_str()) == 0;
        };
        bool ok = true;
        std::string r = root.string();
        ok = ok && sh("synth --out " + r + "/pts --subjects 2 --seqs-per-subject 1 --frames 6 --seed 42");
        ok = ok && sh("project --in " + r + "/pts --out " + r + "/clean --size 32");
        ok = ok && sh("degrade --in " + r + "/clean --out " + r + "/deg --vmask 2 --pmask 0.1666666666666667 --seed 7");
        ok = ok && sh("train --data " + r + "/clean --out " + r + "/run --iters 30 --batch 2 --frames 4 --base-channels 8 --seed 11");
        ok = ok && sh("sample --ckpt " + r + "/run/ckpt_000030.gsu1 --in " + r + "/deg --out " + r + "/up --steps 4 --seed 13");
        ok = ok && sh("eval --ref " + r + "/clean --pred " + r + "/up --out " + r + "/report.csv");
        ok = ok && sh("eval --ref " + r + "/clean --degraded " + r + "/deg --baseline bicubic --out " + r + "/baseline.csv");
        return ok;
    };

    c.expect(run_pipeline("a"), "first pipeline run failed");
    c.expect(run_pipeline("b"), "second pipeline run failed");
    if (!c.ok) return;

    // byte-compare every GSU1 artifact
    std::vector<std::string> rels;
    for (auto& e : fs::recursive_directory_iterator(base / "a"))
        if (e.is_regular_file() && e.path().extension() == ".gsu1")
            rels.push_back(fs::relative(e.path(), base / "a").string());
    c.expect(!rels.empty(), "no GSU1 outputs produced");
    int compared = 0;
    for (const auto& rel : rels) {
        auto pa = base / "a" / rel;
        auto pb = base / "b" / rel;
        if (!fs::exists(pb)) {
            c.expect(false, "missing in run b: " + rel);
            continue;
        }
        if (io::read_file_bytes(pa.string()) != io::read_file_bytes(pb.string()))
            c.expect(false, "byte mismatch: " + rel);
        ++compared;
    }
    std::ostringstream msg;
    msg << compared << " GSU1 artifacts byte-identical";
    c.note(msg.str());
    // CSV reports should also agree
    c.expect(io::read_file_bytes((base / "a/report.csv").string()) ==
                 io::read_file_bytes((base / "b/report.csv").string()),
             "metric reports differ");
}

struct Criterion {
    const char* id;
    const char* name;
    double budget_s;
    std::function<void(Check&)> run;
};

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {"C1", "schedule-algebra", 1.0, criterion1_schedule_algebra},
        {"C2", "forward-process-statistics", 10.0, criterion2_forward_statistics},
        {"C3", "denoiser-gradcheck", 120.0, criterion3_gradcheck},
        {"C4", "oracle-denoiser-exactness", 30.0, criterion4_oracle_exactness},
        {"C5", "conditioning-invariant", 60.0, criterion5_conditioning},
        {"C6", "projection-roundtrip", 60.0, criterion6_projection_roundtrip},
        {"C7", "desk-scale-end-to-end", 3600.0, criterion7_end_to_end},
        {"C8", "metric-sanity", 60.0, criterion8_metric_sanity},
        {"C9", "pipeline-reproducibility", 600.0, criterion9_reproducibility},
    };

    int failures = 0;
    for (auto& cr : criteria) {
        Check check;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > cr.budget_s)
            check.expect(false, "runtime budget exceeded");
        if (!check.ok) ++failures;
        std::printf("[%s] %s %s (%.1fs)%s%s\n", check.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                    check.detail.str().empty() ? "" : " -- ", check.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures;
}
