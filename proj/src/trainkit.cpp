#include "gsu/trainkit.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace gsu::train {

void TrainConfig::validate() const {
    check(learning_rate > 0, "train: learning rate must be positive");
    check(iterations >= 0, "train: negative iteration count");
    check(batch_size >= 1, "train: batch size must be >= 1");
    check(frames >= 1, "train: frames must be >= 1");
    check(ema_decay >= 0.0 && ema_decay < 1.0 + 1e-12, "train: ema decay outside [0,1)");
    check(ema_interval >= 1, "train: ema interval must be >= 1");
    check(!vmask_pool.empty() && !pmask_pool.empty(), "train: empty mask recipe pool");
}

AdamState adam_zeros(const net::ParamStore<float>& params) {
    AdamState st;
    st.m.reserve(params.items.size());
    st.v.reserve(params.items.size());
    for (const auto& [name, t] : params.items) {
        st.m.emplace_back(t.numel(), 0.0f);
        st.v.emplace_back(t.numel(), 0.0f);
    }
    return st;
}

void adam_step(net::ParamStore<float>& params, AdamState& st, double lr, double beta1,
               double beta2, double eps, double grad_scale) {
    check(st.m.size() == params.items.size(), "adam: state/parameter count mismatch");
    st.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
    for (size_t i = 0; i < params.items.size(); ++i) {
        auto& t = params.items[i].second;
        t.node()->ensure_grad();
        const auto& g = t.node()->grad;
        auto& m = st.m[i];
        auto& v = st.v[i];
        float* w = t.data().data();
        for (size_t j = 0; j < g.size(); ++j) {
            double gj = static_cast<double>(g[j]) * grad_scale;
            if (!std::isfinite(gj))
                throw NumericError("adam: non-finite gradient in " + params.items[i].first);
            double mj = beta1 * m[j] + (1.0 - beta1) * gj;
            double vj = beta2 * v[j] + (1.0 - beta2) * gj * gj;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            double mhat = mj / bc1;
            double vhat = vj / bc2;
            w[j] = static_cast<float>(w[j] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

Shadow clone_weights(const net::ParamStore<float>& params) {
    Shadow s;
    s.reserve(params.items.size());
    for (const auto& [name, t] : params.items)
        s.emplace_back(t.data().begin(), t.data().end());
    return s;
}

void ema_update(const net::ParamStore<float>& live, Shadow& shadow, double decay) {
    check(shadow.size() == live.items.size(), "ema: shadow/parameter count mismatch");
    for (size_t i = 0; i < shadow.size(); ++i) {
        const auto& t = live.items[i].second;
        check(shadow[i].size() == t.data().size(), "ema: shape mismatch in " + live.items[i].first);
        kern::active<float>().axpby(static_cast<float>(decay), shadow[i].data(),
                                    static_cast<float>(1.0 - decay), t.data().data(),
                                    shadow[i].data(), static_cast<int64_t>(shadow[i].size()));
    }
}

void load_weights(net::ParamStore<float>& params, const Shadow& values) {
    check(values.size() == params.items.size(), "load_weights: count mismatch");
    for (size_t i = 0; i < values.size(); ++i) {
        auto dst = params.items[i].second.data();
        check(values[i].size() == dst.size(), "load_weights: shape mismatch");
        std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
}

TrainerState init_trainer(const net::DenoiserSpec& spec, uint64_t seed) {
    TrainerState st;
    st.model = net::init_denoiser<float>(spec, seed);
    st.ema = clone_weights(st.model.params);
    st.adam = adam_zeros(st.model.params);
    return st;
}

io::Container checkpoint_to_container(const TrainerState& state) {
    io::Container c;
    c.add(io::Entry::text("meta/spec", state.model.spec.to_json()));
    double iter = static_cast<double>(state.iteration);
    double astep = static_cast<double>(state.adam.step);
    c.add(io::Entry::f64("meta/iteration", {1}, &iter));
    c.add(io::Entry::f64("meta/adam_step", {1}, &astep));
    for (size_t i = 0; i < state.model.params.items.size(); ++i) {
        const auto& [name, t] = state.model.params.items[i];
        std::vector<int64_t> dims = t.shape();
        c.add(io::Entry::f32("param/" + name, dims, t.data().data()));
        c.add(io::Entry::f32("ema/" + name, dims, state.ema[i].data()));
        c.add(io::Entry::f32("adam_m/" + name, dims, state.adam.m[i].data()));
        c.add(io::Entry::f32("adam_v/" + name, dims, state.adam.v[i].data()));
    }
    return c;
}

TrainerState trainer_from_container(const io::Container& c) {
    auto spec = net::DenoiserSpec::from_json(c.at("meta/spec").as_text());
    TrainerState st = init_trainer(spec, 0);
    st.iteration = static_cast<int64_t>(c.at("meta/iteration").as_f64()[0]);
    st.adam.step = static_cast<int64_t>(c.at("meta/adam_step").as_f64()[0]);
    for (size_t i = 0; i < st.model.params.items.size(); ++i) {
        auto& [name, t] = st.model.params.items[i];
        auto pv = c.at("param/" + name).as_f32();
        check(pv.size() == t.data().size(), "checkpoint: shape mismatch for " + name);
        std::copy(pv.begin(), pv.end(), t.data().begin());
        st.ema[i] = c.at("ema/" + name).as_f32();
        st.adam.m[i] = c.at("adam_m/" + name).as_f32();
        st.adam.v[i] = c.at("adam_v/" + name).as_f32();
    }
    return st;
}

void save_checkpoint(const TrainerState& state, const std::string& path) {
    checkpoint_to_container(state).write(path);
}

TrainerState load_checkpoint(const std::string& path) {
    return trainer_from_container(io::Container::read(path));
}

diff::DenoiserFn ema_denoiser(const TrainerState& state) {
    // Copy of the model with the EMA weights swapped in; the callable owns it.
    net::Denoiser<float> fresh = net::init_denoiser<float>(state.model.spec, 0);
    load_weights(fresh.params, state.ema);
    auto owned = std::make_shared<net::Denoiser<float>>(std::move(fresh));
    return [owned](const ten::Tensor<float>& input, double log_snr) {
        return owned->forward(input, log_snr);
    };
}

// The state must outlive the returned callable.
diff::DenoiserFn live_denoiser(const TrainerState& state) {
    const net::Denoiser<float>* m = &state.model;
    return [m](const ten::Tensor<float>& input, double log_snr) {
        return m->forward(input, log_snr);
    };
}

namespace {

geom::DepthVideo window_of(const geom::DepthVideo& v, int64_t start, int64_t frames) {
    geom::DepthVideo w;
    w.frames = frames;
    w.height = v.height;
    w.width = v.width;
    w.z_min = v.z_min;
    int64_t plane = v.height * v.width;
    w.data.assign(v.data.begin() + start * plane, v.data.begin() + (start + frames) * plane);
    w.meta.assign(v.meta.begin() + start, v.meta.begin() + start + frames);
    return w;
}

ten::Tensor<float> video_tensor(const geom::DepthVideo& v) {
    return ten::Tensor<float>::from({v.frames, 1, v.height, v.width},
                                    std::vector<float>(v.data.begin(), v.data.end()));
}

ten::Tensor<float> mask_tensor(const degrade::MaskVideo& m) {
    std::vector<float> data(m.data.size());
    for (size_t i = 0; i < m.data.size(); ++i) data[i] = static_cast<float>(m.data[i]);
    return ten::Tensor<float>::from({m.frames, 1, m.height, m.width}, std::move(data));
}

}  // namespace

void train(TrainerState& state, const std::vector<geom::DepthVideo>& dataset,
           const TrainConfig& cfg, const std::optional<std::string>& out_dir,
           const IterHook& hook) {
    cfg.validate();
    check(!dataset.empty(), "train: empty dataset");
    for (const auto& v : dataset)
        check(v.frames >= cfg.frames, "train: sequence shorter than the frame window");

    std::ofstream log;
    if (out_dir) {
        fs::create_directories(*out_dir);
        log.open(fs::path(*out_dir) / "loss.log", std::ios::app);
        check(static_cast<bool>(log), "train: cannot open loss log");
    }
    auto checkpoint_path = [&](int64_t iter) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "ckpt_%06lld.gsu1", static_cast<long long>(iter));
        return (fs::path(*out_dir) / buf).string();
    };

    diff::DenoiserFn fn = live_denoiser(state);
    for (int64_t iter = state.iteration; iter < cfg.iterations; ++iter) {
        auto t0 = std::chrono::steady_clock::now();
        for (auto& [name, t] : state.model.params.items) t.zero_grad();

        double loss_total = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            auto pick = rng::Stream::of(cfg.seed, "iter", iter, b, "pick");
            int64_t si = static_cast<int64_t>(pick.next_below(dataset.size()));
            const auto& full = dataset[si];
            int64_t range = full.frames - cfg.frames;
            int64_t start = range > 0 ? static_cast<int64_t>(pick.next_below(range + 1)) : 0;
            geom::DepthVideo x0 = window_of(full, start, cfg.frames);

            degrade::MaskRecipe recipe;
            recipe.vertical_keep_every =
                cfg.vmask_pool[pick.next_below(cfg.vmask_pool.size())];
            recipe.pepper_drop_prob = cfg.pmask_pool[pick.next_below(cfg.pmask_pool.size())];
            recipe.seed = pick.next_u64();
            auto degraded = degrade::compose_and_apply(x0, recipe);
            auto mask = degrade::observation_mask(degraded.y);

            auto loss_rng = rng::Stream::of(cfg.seed, "iter", iter, b, "loss");
            try {
                auto loss = diff::masked_loss(video_tensor(x0), video_tensor(degraded.y),
                                              mask_tensor(mask), fn, cfg.schedule, loss_rng);
                auto scaled = ten::mul_scalar(loss, 1.0f / static_cast<float>(cfg.batch_size));
                ten::backward(scaled);
                loss_total += static_cast<double>(loss.item()) / cfg.batch_size;
            } catch (const NumericError& e) {
                throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
            }
        }
        if (!std::isfinite(loss_total))
            throw NumericError("iteration " + std::to_string(iter) + ": non-finite loss");

        adam_step(state.model.params, state.adam, cfg.learning_rate, cfg.adam_beta1,
                  cfg.adam_beta2, cfg.adam_eps);
        if ((iter + 1) % cfg.ema_interval == 0)
            ema_update(state.model.params, state.ema, cfg.ema_decay);
        state.iteration = iter + 1;

        auto t1 = std::chrono::steady_clock::now();
        double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (log)
            log << iter << '\t' << loss_total << '\t' << wall_ms << '\n' << std::flush;
        if (hook) hook({iter, loss_total, wall_ms});
        if (out_dir && cfg.checkpoint_interval > 0 && (iter + 1) % cfg.checkpoint_interval == 0)
            save_checkpoint(state, checkpoint_path(iter + 1));
    }
    if (out_dir) save_checkpoint(state, checkpoint_path(state.iteration));
}

}  // namespace gsu::train
