#pragma once

// Factorized space-time noise-prediction U-Net. Space-only 3x3 convolutions
// (frames are batch for the spatial ops), spatial attention at the lowest
// resolution only, temporal attention with relative position embeddings
// after each spatial attention block. Conditioning is the log-SNR of the
// latent, embedded sinusoidally and injected per residual block as a
// scale/shift. The final projection is zero-initialized so the network
// predicts zero noise before training.

#include <string>
#include <unordered_map>
#include <vector>

#include "gsu/prng.hpp"
#include "gsu/tensor.hpp"
#include "gsu/tensor_nn.hpp"

namespace gsu::net {

struct DenoiserSpec {
    int base_channels = 32;
    std::vector<int> channel_mults = {1, 2};
    int heads = 2;
    int max_frames = 10;  // relative position table spans 2*max_frames-1 offsets
    int groups = 8;
    int in_channels = 2;
    int out_channels = 1;

    int levels() const { return static_cast<int>(channel_mults.size()); }
    int channels_at(int level) const { return base_channels * channel_mults[level]; }
    int time_dim() const { return base_channels * 4; }
    void validate() const;

    std::string to_json() const;
    static DenoiserSpec from_json(const std::string& text);
};

template <class T>
struct ParamStore {
    std::vector<std::pair<std::string, ten::Tensor<T>>> items;
    std::unordered_map<std::string, size_t> index;

    ten::Tensor<T>& add(const std::string& name, ten::Tensor<T> t) {
        if (index.count(name)) throw Error("duplicate parameter name: " + name);
        index[name] = items.size();
        items.emplace_back(name, std::move(t));
        return items.back().second;
    }
    ten::Tensor<T>& at(const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw Error("missing parameter: " + name);
        return items[it->second].second;
    }
    const ten::Tensor<T>& at(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw Error("missing parameter: " + name);
        return items[it->second].second;
    }
    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& [k, v] : items) n += v.numel();
        return n;
    }
};

template <class T>
class Denoiser {
public:
    DenoiserSpec spec;
    ParamStore<T> params;

    // eps_hat for a (F, in_channels, H, W) input at the given log-SNR.
    ten::Tensor<T> forward(const ten::Tensor<T>& input, double log_snr) const;
};

// Deterministic initialization; same seed gives bit-identical parameters.
template <class T>
Denoiser<T> init_denoiser(const DenoiserSpec& spec, uint64_t seed);

extern template class Denoiser<float>;
extern template class Denoiser<double>;
extern template Denoiser<float> init_denoiser<float>(const DenoiserSpec&, uint64_t);
extern template Denoiser<double> init_denoiser<double>(const DenoiserSpec&, uint64_t);

}  // namespace gsu::net
