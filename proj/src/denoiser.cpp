#include "gsu/denoiser.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace gsu::net {

using ten::Tensor;

void DenoiserSpec::validate() const {
    check(base_channels >= groups, "denoiser: base_channels must be >= groups");
    check(!channel_mults.empty(), "denoiser: channel_mults must be non-empty");
    check(heads >= 1, "denoiser: heads must be >= 1");
    check(max_frames >= 1, "denoiser: max_frames must be >= 1");
    check(in_channels >= 1 && out_channels >= 1, "denoiser: bad channel config");
    for (int m : channel_mults) {
        check(m >= 1, "denoiser: channel multiplier must be >= 1");
        int c = base_channels * m;
        check(c % groups == 0, "denoiser: level channels not divisible by groups");
        check(c % heads == 0, "denoiser: level channels not divisible by heads");
    }
}

std::string DenoiserSpec::to_json() const {
    nlohmann::ordered_json j;
    j["base_channels"] = base_channels;
    j["channel_mults"] = channel_mults;
    j["heads"] = heads;
    j["max_frames"] = max_frames;
    j["groups"] = groups;
    j["in_channels"] = in_channels;
    j["out_channels"] = out_channels;
    return j.dump();
}

DenoiserSpec DenoiserSpec::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    DenoiserSpec s;
    s.base_channels = j.at("base_channels").get<int>();
    s.channel_mults = j.at("channel_mults").get<std::vector<int>>();
    s.heads = j.at("heads").get<int>();
    s.max_frames = j.at("max_frames").get<int>();
    s.groups = j.at("groups").get<int>();
    s.in_channels = j.at("in_channels").get<int>();
    s.out_channels = j.at("out_channels").get<int>();
    s.validate();
    return s;
}

namespace {

// Sinusoidal features of the log-SNR: half sines, half cosines with
// geometrically spaced frequencies.
template <class T>
Tensor<T> log_snr_embedding(double log_snr, int dim) {
    int half = dim / 2;
    std::vector<T> v(dim);
    for (int k = 0; k < half; ++k) {
        double freq = half > 1 ? std::exp(-std::log(1000.0) * k / (half - 1)) : 1.0;
        v[k] = static_cast<T>(std::sin(log_snr * freq));
        v[half + k] = static_cast<T>(std::cos(log_snr * freq));
    }
    return Tensor<T>::from({1, dim}, std::move(v));
}

template <class T>
Tensor<T> linear(const ParamStore<T>& p, const std::string& name, const Tensor<T>& x) {
    return ten::add(ten::matmul(x, p.at(name + "/w")), p.at(name + "/b"));
}

// (tokens..., C) self-attention with optional per-head additive bias on the
// logits. x is (B, Tk, C); bias when present is (heads, Tk, Tk).
template <class T>
Tensor<T> attention(const ParamStore<T>& p, const std::string& name, const Tensor<T>& x,
                    int heads, const Tensor<T>* bias) {
    const int64_t B = x.dim(0), Tk = x.dim(1), C = x.dim(2);
    const int64_t dh = C / heads;
    auto h = ten::layer_norm(x, p.at(name + "/ln/g"), p.at(name + "/ln/b"));
    auto split_heads = [&](const Tensor<T>& t) {
        auto r = ten::reshape(t, {B, Tk, heads, dh});
        auto pm = ten::permute(r, {0, 2, 1, 3});  // (B, heads, Tk, dh)
        return ten::reshape(pm, {B * heads, Tk, dh});
    };
    auto q = split_heads(linear(p, name + "/q", h));
    auto k = split_heads(linear(p, name + "/k", h));
    auto v = split_heads(linear(p, name + "/v", h));

    auto scores = ten::mul_scalar(ten::matmul_nt(q, k),
                                  static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
    if (bias) {
        auto s4 = ten::reshape(scores, {B, static_cast<int64_t>(heads), Tk, Tk});
        scores = ten::reshape(ten::add(s4, *bias), {B * heads, Tk, Tk});
    }
    auto attn = ten::softmax_lastdim(scores);
    auto ctx = ten::matmul(attn, v);  // (B*heads, Tk, dh)
    auto merged = ten::reshape(
        ten::permute(ten::reshape(ctx, {B, static_cast<int64_t>(heads), Tk, dh}), {0, 2, 1, 3}),
        {B, Tk, C});
    return ten::add(x, linear(p, name + "/proj", merged));
}

template <class T>
Tensor<T> spatial_attention(const ParamStore<T>& p, const std::string& name, const Tensor<T>& x,
                            int heads) {
    const int64_t F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    auto tokens = ten::reshape(ten::permute(x, {0, 2, 3, 1}), {F, H * W, C});
    auto out = attention(p, name, tokens, heads, static_cast<const Tensor<T>*>(nullptr));
    return ten::permute(ten::reshape(out, {F, H, W, C}), {0, 3, 1, 2});
}

template <class T>
Tensor<T> temporal_attention(const ParamStore<T>& p, const std::string& name, const Tensor<T>& x,
                             int heads, int max_frames) {
    const int64_t F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    check(F <= max_frames, "denoiser: sequence has " + std::to_string(F) +
                               " frames but the relative position table covers " +
                               std::to_string(max_frames));
    // Relative position bias per head: row (i-j) + max_frames - 1.
    std::vector<int64_t> idx(F * F);
    for (int64_t i = 0; i < F; ++i)
        for (int64_t j = 0; j < F; ++j) idx[i * F + j] = (i - j) + max_frames - 1;
    auto bias = ten::permute(
        ten::reshape(ten::gather_rows(p.at(name + "/relpos"), idx),
                     {F, F, static_cast<int64_t>(heads)}),
        {2, 0, 1});  // (heads, F, F)

    auto tokens = ten::reshape(ten::permute(x, {2, 3, 0, 1}), {H * W, F, C});
    auto out = attention(p, name, tokens, heads, &bias);
    return ten::permute(ten::reshape(out, {H, W, F, C}), {2, 3, 0, 1});
}

template <class T>
Tensor<T> resblock(const ParamStore<T>& p, const std::string& name, const Tensor<T>& x,
                   const Tensor<T>& cond, int groups, int64_t cin, int64_t cout) {
    auto h = ten::silu(ten::group_norm(x, groups, p.at(name + "/gn1/g"), p.at(name + "/gn1/b")));
    h = ten::conv2d(h, p.at(name + "/conv1/w"), p.at(name + "/conv1/b"), 1);
    auto scale = ten::reshape(linear(p, name + "/film_scale", cond), {cout, 1, 1});
    auto shift = ten::reshape(linear(p, name + "/film_shift", cond), {cout, 1, 1});
    h = ten::add(ten::mul(h, ten::add_scalar(scale, T(1))), shift);
    h = ten::silu(ten::group_norm(h, groups, p.at(name + "/gn2/g"), p.at(name + "/gn2/b")));
    h = ten::conv2d(h, p.at(name + "/conv2/w"), p.at(name + "/conv2/b"), 1);
    if (cin != cout)
        return ten::add(h, ten::conv2d(x, p.at(name + "/skip/w"), p.at(name + "/skip/b"), 0));
    return ten::add(h, x);
}

template <class T>
struct Init {
    ParamStore<T>& p;
    uint64_t seed;

    std::vector<T> normal(const std::string& name, int64_t n, double std) {
        auto rng = rng::Stream::of(seed, "init", name);
        std::vector<T> v(n);
        for (auto& x : v) x = static_cast<T>(std * rng.next_normal());
        return v;
    }
    void conv(const std::string& name, int64_t cout, int64_t cin, int64_t k, bool zero = false) {
        int64_t n = cout * cin * k * k;
        double std = zero ? 0.0 : std::sqrt(1.0 / static_cast<double>(cin * k * k));
        p.add(name + "/w",
              Tensor<T>::from({cout, cin, k, k}, zero ? std::vector<T>(n, T(0))
                                                      : normal(name + "/w", n, std), true));
        p.add(name + "/b", Tensor<T>::zeros({cout}, true));
    }
    void lin(const std::string& name, int64_t in, int64_t out, bool zero = false) {
        double std = zero ? 0.0 : std::sqrt(1.0 / static_cast<double>(in));
        p.add(name + "/w",
              Tensor<T>::from({in, out}, zero ? std::vector<T>(in * out, T(0))
                                              : normal(name + "/w", in * out, std), true));
        p.add(name + "/b", Tensor<T>::zeros({out}, true));
    }
    void norm(const std::string& name, int64_t c) {
        p.add(name + "/g", Tensor<T>::ones({c}, true));
        p.add(name + "/b", Tensor<T>::zeros({c}, true));
    }
    void res(const std::string& name, int64_t cin, int64_t cout, int64_t time_dim) {
        norm(name + "/gn1", cin);
        conv(name + "/conv1", cout, cin, 3);
        lin(name + "/film_scale", time_dim, cout, /*zero=*/true);
        lin(name + "/film_shift", time_dim, cout, /*zero=*/true);
        norm(name + "/gn2", cout);
        conv(name + "/conv2", cout, cout, 3);
        if (cin != cout) conv(name + "/skip", cout, cin, 1);
    }
    void attn(const std::string& name, int64_t c, bool relpos, int heads, int max_frames) {
        norm(name + "/ln", c);
        lin(name + "/q", c, c);
        lin(name + "/k", c, c);
        lin(name + "/v", c, c);
        lin(name + "/proj", c, c);
        if (relpos)
            p.add(name + "/relpos",
                  Tensor<T>::from({2 * max_frames - 1, heads},
                                  normal(name + "/relpos", (2 * max_frames - 1) * heads, 0.02),
                                  true));
    }
};

}  // namespace

template <class T>
Denoiser<T> init_denoiser(const DenoiserSpec& spec, uint64_t seed) {
    spec.validate();
    Denoiser<T> d;
    d.spec = spec;
    Init<T> init{d.params, seed};
    const int L = spec.levels();
    const int td = spec.time_dim();

    init.lin("cond/lin0", spec.base_channels, td);
    init.lin("cond/lin1", td, td);
    init.conv("conv_in", spec.channels_at(0), spec.in_channels, 3);

    int prev = spec.channels_at(0);
    for (int l = 0; l < L; ++l) {
        int c = spec.channels_at(l);
        std::string base = "down" + std::to_string(l);
        init.res(base + "/res", prev, c, td);
        if (l == L - 1) {
            init.attn(base + "/sattn", c, false, spec.heads, spec.max_frames);
            init.attn(base + "/tattn", c, true, spec.heads, spec.max_frames);
        }
        prev = c;
    }

    int cl = spec.channels_at(L - 1);
    init.res("mid/res1", cl, cl, td);
    init.attn("mid/sattn", cl, false, spec.heads, spec.max_frames);
    init.attn("mid/tattn", cl, true, spec.heads, spec.max_frames);
    init.res("mid/res2", cl, cl, td);

    prev = cl;
    for (int l = L - 1; l >= 0; --l) {
        int c = spec.channels_at(l);
        std::string base = "up" + std::to_string(l);
        init.res(base + "/res", prev + c, c, td);
        if (l == L - 1) {
            init.attn(base + "/sattn", c, false, spec.heads, spec.max_frames);
            init.attn(base + "/tattn", c, true, spec.heads, spec.max_frames);
        }
        prev = c;
    }

    init.norm("out/gn", spec.channels_at(0));
    init.conv("out/conv", spec.out_channels, spec.channels_at(0), 3, /*zero=*/true);
    return d;
}

template <class T>
Tensor<T> Denoiser<T>::forward(const Tensor<T>& input, double log_snr) const {
    check(input.rank() == 4, "denoiser: input must be (F, C, H, W), got " +
                                 ten::shape_str(input.shape()));
    const int64_t F = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    check(C == spec.in_channels, "denoiser: expected " + std::to_string(spec.in_channels) +
                                     " input channels, got " + std::to_string(C));
    const int L = spec.levels();
    const int64_t div = int64_t(1) << (L - 1);
    check(H % div == 0 && W % div == 0,
          "denoiser: spatial dims must be divisible by " + std::to_string(div));
    const auto& p = params;

    auto emb = log_snr_embedding<T>(log_snr, spec.base_channels);
    auto cond = linear(p, "cond/lin1", ten::silu(linear(p, "cond/lin0", emb)));

    auto x = ten::conv2d(input, p.at("conv_in/w"), p.at("conv_in/b"), 1);
    std::vector<Tensor<T>> skips;
    int prev = spec.channels_at(0);
    for (int l = 0; l < L; ++l) {
        int c = spec.channels_at(l);
        std::string base = "down" + std::to_string(l);
        x = resblock(p, base + "/res", x, cond, spec.groups, prev, c);
        if (l == L - 1) {
            x = spatial_attention(p, base + "/sattn", x, spec.heads);
            x = temporal_attention(p, base + "/tattn", x, spec.heads, spec.max_frames);
        }
        skips.push_back(x);
        if (l < L - 1) x = ten::avg_pool2d(x);
        prev = c;
    }

    int cl = spec.channels_at(L - 1);
    x = resblock(p, "mid/res1", x, cond, spec.groups, cl, cl);
    x = spatial_attention(p, "mid/sattn", x, spec.heads);
    x = temporal_attention(p, "mid/tattn", x, spec.heads, spec.max_frames);
    x = resblock(p, "mid/res2", x, cond, spec.groups, cl, cl);

    prev = cl;
    for (int l = L - 1; l >= 0; --l) {
        int c = spec.channels_at(l);
        std::string base = "up" + std::to_string(l);
        x = ten::concat2(x, skips[static_cast<size_t>(l)], 1);
        x = resblock(p, base + "/res", x, cond, spec.groups, prev + c, c);
        if (l == L - 1) {
            x = spatial_attention(p, base + "/sattn", x, spec.heads);
            x = temporal_attention(p, base + "/tattn", x, spec.heads, spec.max_frames);
        }
        if (l > 0) x = ten::upsample_nearest2d(x);
        prev = c;
    }

    x = ten::silu(ten::group_norm(x, spec.groups, p.at("out/gn/g"), p.at("out/gn/b")));
    x = ten::conv2d(x, p.at("out/conv/w"), p.at("out/conv/b"), 1);
    (void)F;
    return x;
}

template class Denoiser<float>;
template class Denoiser<double>;
template Denoiser<float> init_denoiser<float>(const DenoiserSpec&, uint64_t);
template Denoiser<double> init_denoiser<double>(const DenoiserSpec&, uint64_t);

}  // namespace gsu::net
