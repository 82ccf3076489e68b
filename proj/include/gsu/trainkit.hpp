#pragma once

// Training loop: per iteration draw a batch of clean frame windows, degrade
// each with a recipe sampled from the pool, optimize the masked
// eps-prediction loss with Adam, and track an EMA shadow of the weights.
//
// All per-iteration randomness is keyed by (seed, iteration, batch index),
// never by generator history, so a resumed run reproduces the original
// trajectory bit-exactly.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gsu/degrade.hpp"
#include "gsu/denoiser.hpp"
#include "gsu/diffcore.hpp"
#include "gsu/gaitgeom.hpp"

namespace gsu::train {

struct TrainConfig {
    double learning_rate = 3e-4;
    int64_t iterations = 1000;
    int batch_size = 8;
    int frames = 10;
    double ema_decay = 0.995;
    int ema_interval = 10;
    std::vector<int64_t> vmask_pool = {2, 3, 4};
    std::vector<double> pmask_pool = {1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0};
    uint64_t seed = 0;
    int64_t checkpoint_interval = 0;  // 0: only the final checkpoint
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    diff::Schedule schedule;

    void validate() const;
};

struct AdamState {
    int64_t step = 0;
    std::vector<std::vector<float>> m, v;  // aligned with parameter order
};
AdamState adam_zeros(const net::ParamStore<float>& params);

// One bias-corrected adaptive-moment update. grad_scale multiplies the raw
// accumulated gradients (the batch loop pre-scales, so normally 1).
void adam_step(net::ParamStore<float>& params, AdamState& st, double lr, double beta1,
               double beta2, double eps, double grad_scale = 1.0);

using Shadow = std::vector<std::vector<float>>;
Shadow clone_weights(const net::ParamStore<float>& params);
// shadow' = decay * shadow + (1 - decay) * live
void ema_update(const net::ParamStore<float>& live, Shadow& shadow, double decay);
void load_weights(net::ParamStore<float>& params, const Shadow& values);

struct TrainerState {
    net::Denoiser<float> model;
    Shadow ema;
    AdamState adam;
    int64_t iteration = 0;  // completed iterations
};

TrainerState init_trainer(const net::DenoiserSpec& spec, uint64_t seed);

io::Container checkpoint_to_container(const TrainerState& state);
TrainerState trainer_from_container(const io::Container& c);
void save_checkpoint(const TrainerState& state, const std::string& path);
TrainerState load_checkpoint(const std::string& path);

// Denoiser callable over the EMA weights (used for sampling/eval).
diff::DenoiserFn ema_denoiser(const TrainerState& state);
diff::DenoiserFn live_denoiser(const TrainerState& state);

struct IterStats {
    int64_t iter;
    double loss;
    double wall_ms;
};
using IterHook = std::function<void(const IterStats&)>;

// Runs from state.iteration up to cfg.iterations. When out_dir is set,
// appends `iter<TAB>loss<TAB>wallclock_ms` lines to <out_dir>/loss.log and
// writes ckpt_<iter>.gsu1 checkpoints.
void train(TrainerState& state, const std::vector<geom::DepthVideo>& dataset,
           const TrainConfig& cfg, const std::optional<std::string>& out_dir = std::nullopt,
           const IterHook& hook = nullptr);

}  // namespace gsu::train
