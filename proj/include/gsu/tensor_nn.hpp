#pragma once

// Network primitives on top of the tensor core: matmul (plain and
// transposed-B), spatial convolution over frame-batched video tensors,
// pooling/upsampling, softmax and the two normalizations.
//
// All accumulation orders are fixed (see kernels.hpp), so results are
// reproducible and identical between the scalar and AVX2 kernel tables.

#include "gsu/tensor.hpp"

namespace gsu::ten {

namespace detail {

// Normalizes (leading..., M, K) to a batch view. b may be rank 2 (shared)
// or have identical leading dims.
struct BatchView {
    int64_t batches, M, K, N;
    bool shared_b;
};

inline BatchView matmul_view(const Shape& a, const Shape& b, int64_t b_rows_dim,
                             const char* op) {
    if (a.size() < 2 || b.size() < 2)
        throw Error(std::string(op) + ": inputs must be rank >= 2, got " + shape_str(a) +
                    " and " + shape_str(b));
    BatchView v{};
    v.M = a[a.size() - 2];
    v.K = a[a.size() - 1];
    int64_t bk = b[b.size() - 2 + b_rows_dim];  // dim holding K in b
    int64_t bn = b[b.size() - 1 - b_rows_dim];
    if (bk != v.K)
        throw Error(std::string(op) + ": inner dimension mismatch " + shape_str(a) + " x " +
                    shape_str(b));
    v.N = bn;
    v.batches = 1;
    for (size_t i = 0; i + 2 < a.size(); ++i) v.batches *= a[i];
    v.shared_b = b.size() == 2;
    if (!v.shared_b) {
        if (b.size() != a.size())
            throw Error(std::string(op) + ": rank mismatch " + shape_str(a) + " x " + shape_str(b));
        for (size_t i = 0; i + 2 < a.size(); ++i)
            if (a[i] != b[i])
                throw Error(std::string(op) + ": batch dims differ " + shape_str(a) + " x " +
                            shape_str(b));
    }
    return v;
}

}  // namespace detail

// c = a @ b with a (..., M, K) and b (K, N) or (..., K, N).
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    auto v = detail::matmul_view(a.shape(), b.shape(), 0, "matmul");
    Shape out_shape(a.shape().begin(), a.shape().end() - 1);
    out_shape.push_back(v.N);

    const auto& kt = kern::active<T>();
    std::vector<T> out(v.batches * v.M * v.N, T(0));
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    for (int64_t bi = 0; bi < v.batches; ++bi) {
        const T* A = pa + bi * v.M * v.K;
        const T* B = v.shared_b ? pb : pb + bi * v.K * v.N;
        T* C = out.data() + bi * v.M * v.N;
        for (int64_t m = 0; m < v.M; ++m)
            for (int64_t k = 0; k < v.K; ++k)
                kt.saxpy(A[m * v.K + k], B + k * v.N, C + m * v.N, v.N);
    }

    auto an = a.node();
    auto bn = b.node();
    return make_op<T>(out_shape, std::move(out), "matmul", {a, b}, [an, bn, v](Node<T>& o) {
        const auto& kt = kern::active<T>();
        const T* g = o.grad.data();
        const T* pa = an->val->data();
        const T* pb = bn->val->data();
        if (an->requires_grad) {
            an->ensure_grad();
            T* da = an->grad.data();
            for (int64_t bi = 0; bi < v.batches; ++bi) {
                const T* G = g + bi * v.M * v.N;
                const T* B = v.shared_b ? pb : pb + bi * v.K * v.N;
                T* DA = da + bi * v.M * v.K;
                for (int64_t m = 0; m < v.M; ++m)
                    for (int64_t k = 0; k < v.K; ++k)
                        DA[m * v.K + k] += kt.dot(G + m * v.N, B + k * v.N, v.N);
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            T* db = bn->grad.data();
            for (int64_t bi = 0; bi < v.batches; ++bi) {
                const T* G = g + bi * v.M * v.N;
                const T* A = pa + bi * v.M * v.K;
                T* DB = v.shared_b ? db : db + bi * v.K * v.N;
                for (int64_t m = 0; m < v.M; ++m)
                    for (int64_t k = 0; k < v.K; ++k)
                        kt.saxpy(A[m * v.K + k], G + m * v.N, DB + k * v.N, v.N);
            }
        }
    });
}

// c = a @ b^T with a (..., M, K), b (..., N, K): rows of both contiguous.
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
    auto v = detail::matmul_view(a.shape(), b.shape(), 1, "matmul_nt");
    Shape out_shape(a.shape().begin(), a.shape().end() - 1);
    out_shape.push_back(v.N);

    const auto& kt = kern::active<T>();
    std::vector<T> out(v.batches * v.M * v.N);
    const T* pa = a.data().data();
    const T* pb = b.data().data();
    for (int64_t bi = 0; bi < v.batches; ++bi) {
        const T* A = pa + bi * v.M * v.K;
        const T* B = v.shared_b ? pb : pb + bi * v.N * v.K;
        T* C = out.data() + bi * v.M * v.N;
        for (int64_t m = 0; m < v.M; ++m)
            for (int64_t n = 0; n < v.N; ++n)
                C[m * v.N + n] = kt.dot(A + m * v.K, B + n * v.K, v.K);
    }

    auto an = a.node();
    auto bn = b.node();
    return make_op<T>(out_shape, std::move(out), "matmul_nt", {a, b}, [an, bn, v](Node<T>& o) {
        const auto& kt = kern::active<T>();
        const T* g = o.grad.data();
        const T* pa = an->val->data();
        const T* pb = bn->val->data();
        for (int64_t bi = 0; bi < v.batches; ++bi) {
            const T* G = g + bi * v.M * v.N;
            const T* A = pa + bi * v.M * v.K;
            const T* B = v.shared_b ? pb : pb + bi * v.N * v.K;
            if (an->requires_grad) {
                an->ensure_grad();
                T* DA = an->grad.data() + bi * v.M * v.K;
                for (int64_t m = 0; m < v.M; ++m)
                    for (int64_t n = 0; n < v.N; ++n)
                        kt.saxpy(G[m * v.N + n], B + n * v.K, DA + m * v.K, v.K);
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                T* DB = bn->grad.data() + (v.shared_b ? 0 : bi * v.N * v.K);
                for (int64_t m = 0; m < v.M; ++m)
                    for (int64_t n = 0; n < v.N; ++n)
                        kt.saxpy(G[m * v.N + n], A + m * v.K, DB + n * v.K, v.K);
            }
        }
    });
}

// Space-only convolution on a frame-batched video tensor. x (F, Cin, H, W),
// w (Cout, Cin, kh, kw), bias (Cout), stride 1. This is the 1 x k x k
// spatial 3D kernel: frames are independent.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int64_t pad) {
    check(x.rank() == 4, "conv2d: input must be (F, C, H, W), got " + shape_str(x.shape()));
    check(w.rank() == 4, "conv2d: weight must be (Cout, Cin, kh, kw)");
    const int64_t F = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    check(kh >= 1 && kw >= 1, "conv2d: non-positive kernel size");
    check(w.dim(1) == Cin, "conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
                               shape_str(w.shape()));
    check(bias.rank() == 1 && bias.dim(0) == Cout, "conv2d: bias shape mismatch");
    check(pad >= 0, "conv2d: negative padding");
    const int64_t Ho = H + 2 * pad - kh + 1;
    const int64_t Wo = W + 2 * pad - kw + 1;
    check(Ho >= 1 && Wo >= 1, "conv2d: kernel larger than padded input");

    const auto& kt = kern::active<T>();
    std::vector<T> out(F * Cout * Ho * Wo);
    const T* px = x.data().data();
    const T* pw = w.data().data();
    const T* pbias = bias.data().data();

    for (int64_t f = 0; f < F; ++f)
        for (int64_t co = 0; co < Cout; ++co) {
            T* plane = out.data() + (f * Cout + co) * Ho * Wo;
            std::fill(plane, plane + Ho * Wo, pbias[co]);
            for (int64_t ci = 0; ci < Cin; ++ci) {
                const T* in_plane = px + (f * Cin + ci) * H * W;
                for (int64_t i = 0; i < kh; ++i)
                    for (int64_t j = 0; j < kw; ++j) {
                        T alpha = pw[((co * Cin + ci) * kh + i) * kw + j];
                        int64_t ow0 = std::max<int64_t>(0, pad - j);
                        int64_t ow1 = std::min<int64_t>(Wo, W + pad - j);
                        if (ow1 <= ow0) continue;
                        for (int64_t oh = 0; oh < Ho; ++oh) {
                            int64_t ih = oh + i - pad;
                            if (ih < 0 || ih >= H) continue;
                            kt.saxpy(alpha, in_plane + ih * W + (ow0 + j - pad),
                                     plane + oh * Wo + ow0, ow1 - ow0);
                        }
                    }
            }
        }

    auto xn = x.node();
    auto wn = w.node();
    auto bn = bias.node();
    return make_op<T>(
        {F, Cout, Ho, Wo}, std::move(out), "conv2d", {x, w, bias},
        [xn, wn, bn, F, Cin, H, W, Cout, kh, kw, pad, Ho, Wo](Node<T>& o) {
            const auto& kt = kern::active<T>();
            const T* g = o.grad.data();
            const T* px = xn->val->data();
            const T* pw = wn->val->data();
            if (xn->requires_grad) {
                xn->ensure_grad();
                T* dx = xn->grad.data();
                for (int64_t f = 0; f < F; ++f)
                    for (int64_t co = 0; co < Cout; ++co) {
                        const T* gplane = g + (f * Cout + co) * Ho * Wo;
                        for (int64_t ci = 0; ci < Cin; ++ci) {
                            T* dplane = dx + (f * Cin + ci) * H * W;
                            for (int64_t i = 0; i < kh; ++i)
                                for (int64_t j = 0; j < kw; ++j) {
                                    T alpha = pw[((co * Cin + ci) * kh + i) * kw + j];
                                    int64_t ow0 = std::max<int64_t>(0, pad - j);
                                    int64_t ow1 = std::min<int64_t>(Wo, W + pad - j);
                                    if (ow1 <= ow0) continue;
                                    for (int64_t oh = 0; oh < Ho; ++oh) {
                                        int64_t ih = oh + i - pad;
                                        if (ih < 0 || ih >= H) continue;
                                        kt.saxpy(alpha, gplane + oh * Wo + ow0,
                                                 dplane + ih * W + (ow0 + j - pad), ow1 - ow0);
                                    }
                                }
                        }
                    }
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
                T* dw = wn->grad.data();
                for (int64_t co = 0; co < Cout; ++co)
                    for (int64_t ci = 0; ci < Cin; ++ci)
                        for (int64_t i = 0; i < kh; ++i)
                            for (int64_t j = 0; j < kw; ++j) {
                                T acc = 0;
                                int64_t ow0 = std::max<int64_t>(0, pad - j);
                                int64_t ow1 = std::min<int64_t>(Wo, W + pad - j);
                                if (ow1 > ow0)
                                    for (int64_t f = 0; f < F; ++f) {
                                        const T* gplane = g + (f * Cout + co) * Ho * Wo;
                                        const T* in_plane = px + (f * Cin + ci) * H * W;
                                        for (int64_t oh = 0; oh < Ho; ++oh) {
                                            int64_t ih = oh + i - pad;
                                            if (ih < 0 || ih >= H) continue;
                                            acc += kt.dot(gplane + oh * Wo + ow0,
                                                          in_plane + ih * W + (ow0 + j - pad),
                                                          ow1 - ow0);
                                        }
                                    }
                                dw[((co * Cin + ci) * kh + i) * kw + j] += acc;
                            }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                T* db = bn->grad.data();
                for (int64_t f = 0; f < F; ++f)
                    for (int64_t co = 0; co < Cout; ++co) {
                        const T* gplane = g + (f * Cout + co) * Ho * Wo;
                        T acc = 0;
                        for (int64_t i = 0; i < Ho * Wo; ++i) acc += gplane[i];
                        db[co] += acc;
                    }
            }
        });
}

// 2x average pooling over the spatial dims of (F, C, H, W).
template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& x) {
    check(x.rank() == 4, "avg_pool2d: input must be rank 4");
    const int64_t F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    check(H % 2 == 0 && W % 2 == 0, "avg_pool2d: spatial dims must be even, got " +
                                        shape_str(x.shape()));
    const int64_t Ho = H / 2, Wo = W / 2;
    std::vector<T> out(F * C * Ho * Wo);
    const T* px = x.data().data();
    for (int64_t p = 0; p < F * C; ++p) {
        const T* in = px + p * H * W;
        T* o = out.data() + p * Ho * Wo;
        for (int64_t oh = 0; oh < Ho; ++oh)
            for (int64_t ow = 0; ow < Wo; ++ow) {
                const T* r0 = in + (2 * oh) * W + 2 * ow;
                const T* r1 = r0 + W;
                o[oh * Wo + ow] = ((r0[0] + r0[1]) + (r1[0] + r1[1])) * T(0.25);
            }
    }
    auto xn = x.node();
    return make_op<T>({F, C, Ho, Wo}, std::move(out), "avg_pool2d", {x},
                      [xn, F, C, H, W, Ho, Wo](Node<T>& o) {
                          if (!xn->requires_grad) return;
                          xn->ensure_grad();
                          const T* g = o.grad.data();
                          T* dx = xn->grad.data();
                          for (int64_t p = 0; p < F * C; ++p) {
                              const T* gp = g + p * Ho * Wo;
                              T* dp = dx + p * H * W;
                              for (int64_t oh = 0; oh < Ho; ++oh)
                                  for (int64_t ow = 0; ow < Wo; ++ow) {
                                      T v = gp[oh * Wo + ow] * T(0.25);
                                      dp[(2 * oh) * W + 2 * ow] += v;
                                      dp[(2 * oh) * W + 2 * ow + 1] += v;
                                      dp[(2 * oh + 1) * W + 2 * ow] += v;
                                      dp[(2 * oh + 1) * W + 2 * ow + 1] += v;
                                  }
                          }
                      });
}

// 2x nearest-neighbor upsampling over the spatial dims.
template <class T>
Tensor<T> upsample_nearest2d(const Tensor<T>& x) {
    check(x.rank() == 4, "upsample_nearest2d: input must be rank 4");
    const int64_t F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Ho = H * 2, Wo = W * 2;
    std::vector<T> out(F * C * Ho * Wo);
    const T* px = x.data().data();
    for (int64_t p = 0; p < F * C; ++p) {
        const T* in = px + p * H * W;
        T* o = out.data() + p * Ho * Wo;
        for (int64_t oh = 0; oh < Ho; ++oh)
            for (int64_t ow = 0; ow < Wo; ++ow) o[oh * Wo + ow] = in[(oh / 2) * W + ow / 2];
    }
    auto xn = x.node();
    return make_op<T>({F, C, Ho, Wo}, std::move(out), "upsample_nearest2d", {x},
                      [xn, F, C, H, W, Ho, Wo](Node<T>& o) {
                          if (!xn->requires_grad) return;
                          xn->ensure_grad();
                          const T* g = o.grad.data();
                          T* dx = xn->grad.data();
                          for (int64_t p = 0; p < F * C; ++p) {
                              const T* gp = g + p * Ho * Wo;
                              T* dp = dx + p * H * W;
                              for (int64_t h = 0; h < H; ++h)
                                  for (int64_t w = 0; w < W; ++w) {
                                      const T* r0 = gp + (2 * h) * Wo + 2 * w;
                                      const T* r1 = r0 + Wo;
                                      dp[h * W + w] += (r0[0] + r0[1]) + (r1[0] + r1[1]);
                                  }
                          }
                      },
                      /*check_finite=*/false);
}

// Softmax over the last axis.
template <class T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
    check(x.rank() >= 1, "softmax: rank must be >= 1");
    const int64_t C = x.dim(x.rank() - 1);
    const int64_t rows = x.numel() / C;
    std::vector<T> out(x.numel());
    const T* px = x.data().data();
    for (int64_t r = 0; r < rows; ++r) {
        const T* in = px + r * C;
        T* o = out.data() + r * C;
        T mx = in[0];
        for (int64_t i = 1; i < C; ++i) mx = std::max(mx, in[i]);
        T s = 0;
        for (int64_t i = 0; i < C; ++i) {
            o[i] = std::exp(in[i] - mx);
            s += o[i];
        }
        for (int64_t i = 0; i < C; ++i) o[i] = o[i] / s;
    }
    auto xn = x.node();
    return make_op<T>(x.shape(), std::move(out), "softmax", {x}, [xn, C, rows](Node<T>& o) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const T* g = o.grad.data();
        const T* y = o.val->data();
        T* dx = xn->grad.data();
        for (int64_t r = 0; r < rows; ++r) {
            const T* gr = g + r * C;
            const T* yr = y + r * C;
            T dot = 0;
            for (int64_t i = 0; i < C; ++i) dot += gr[i] * yr[i];
            T* d = dx + r * C;
            for (int64_t i = 0; i < C; ++i) d[i] += yr[i] * (gr[i] - dot);
        }
    });
}

// Layer normalization over the last axis with affine parameters.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5)) {
    const int64_t C = x.dim(x.rank() - 1);
    check(gamma.rank() == 1 && gamma.dim(0) == C, "layer_norm: gamma shape mismatch");
    check(beta.rank() == 1 && beta.dim(0) == C, "layer_norm: beta shape mismatch");
    const int64_t rows = x.numel() / C;
    std::vector<T> out(x.numel());
    const T* px = x.data().data();
    const T* pg = gamma.data().data();
    const T* pb = beta.data().data();
    for (int64_t r = 0; r < rows; ++r) {
        const T* in = px + r * C;
        T* o = out.data() + r * C;
        T mean = 0;
        for (int64_t i = 0; i < C; ++i) mean += in[i];
        mean /= static_cast<T>(C);
        T var = 0;
        for (int64_t i = 0; i < C; ++i) var += (in[i] - mean) * (in[i] - mean);
        var /= static_cast<T>(C);
        T inv = T(1) / std::sqrt(var + eps);
        for (int64_t i = 0; i < C; ++i) o[i] = (in[i] - mean) * inv * pg[i] + pb[i];
    }
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    return make_op<T>(
        x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
        [xn, gn, bn, C, rows, eps](Node<T>& o) {
            const T* g = o.grad.data();
            const T* px = xn->val->data();
            const T* pg = gn->val->data();
            if (xn->requires_grad) xn->ensure_grad();
            if (gn->requires_grad) gn->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            std::vector<T> xhat(C);
            for (int64_t r = 0; r < rows; ++r) {
                const T* in = px + r * C;
                const T* gr = g + r * C;
                T mean = 0;
                for (int64_t i = 0; i < C; ++i) mean += in[i];
                mean /= static_cast<T>(C);
                T var = 0;
                for (int64_t i = 0; i < C; ++i) var += (in[i] - mean) * (in[i] - mean);
                var /= static_cast<T>(C);
                T inv = T(1) / std::sqrt(var + eps);
                for (int64_t i = 0; i < C; ++i) xhat[i] = (in[i] - mean) * inv;
                if (xn->requires_grad) {
                    T m1 = 0, m2 = 0;
                    for (int64_t i = 0; i < C; ++i) {
                        T dyh = gr[i] * pg[i];
                        m1 += dyh;
                        m2 += dyh * xhat[i];
                    }
                    m1 /= static_cast<T>(C);
                    m2 /= static_cast<T>(C);
                    T* dx = xn->grad.data() + r * C;
                    for (int64_t i = 0; i < C; ++i)
                        dx[i] += inv * (gr[i] * pg[i] - m1 - xhat[i] * m2);
                }
                if (gn->requires_grad) {
                    T* dg = gn->grad.data();
                    for (int64_t i = 0; i < C; ++i) dg[i] += gr[i] * xhat[i];
                }
                if (bn->requires_grad) {
                    T* db = bn->grad.data();
                    for (int64_t i = 0; i < C; ++i) db[i] += gr[i];
                }
            }
        });
}

// Group normalization over (F, C, H, W) with per-channel affine.
template <class T>
Tensor<T> group_norm(const Tensor<T>& x, int64_t groups, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps = T(1e-5)) {
    check(x.rank() == 4, "group_norm: input must be rank 4, got " + shape_str(x.shape()));
    const int64_t F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    check(groups >= 1 && C % groups == 0, "group_norm: channels not divisible by groups");
    check(gamma.rank() == 1 && gamma.dim(0) == C, "group_norm: gamma shape mismatch");
    check(beta.rank() == 1 && beta.dim(0) == C, "group_norm: beta shape mismatch");
    const int64_t cg = C / groups;
    const int64_t hw = H * W;
    const int64_t S = cg * hw;

    std::vector<T> out(x.numel());
    const T* px = x.data().data();
    const T* pg = gamma.data().data();
    const T* pb = beta.data().data();
    for (int64_t f = 0; f < F; ++f)
        for (int64_t gidx = 0; gidx < groups; ++gidx) {
            const T* in = px + (f * C + gidx * cg) * hw;
            T* o = out.data() + (f * C + gidx * cg) * hw;
            T mean = 0;
            for (int64_t i = 0; i < S; ++i) mean += in[i];
            mean /= static_cast<T>(S);
            T var = 0;
            for (int64_t i = 0; i < S; ++i) var += (in[i] - mean) * (in[i] - mean);
            var /= static_cast<T>(S);
            T inv = T(1) / std::sqrt(var + eps);
            for (int64_t c = 0; c < cg; ++c) {
                T gc = pg[gidx * cg + c], bc = pb[gidx * cg + c];
                for (int64_t i = 0; i < hw; ++i)
                    o[c * hw + i] = (in[c * hw + i] - mean) * inv * gc + bc;
            }
        }

    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    return make_op<T>(
        x.shape(), std::move(out), "group_norm", {x, gamma, beta},
        [xn, gn, bn, F, C, groups, cg, hw, S, eps](Node<T>& o) {
            const T* g = o.grad.data();
            const T* px = xn->val->data();
            const T* pg = gn->val->data();
            if (xn->requires_grad) xn->ensure_grad();
            if (gn->requires_grad) gn->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            std::vector<T> xhat(S);
            for (int64_t f = 0; f < F; ++f)
                for (int64_t gidx = 0; gidx < groups; ++gidx) {
                    int64_t base = (f * C + gidx * cg) * hw;
                    const T* in = px + base;
                    const T* gr = g + base;
                    T mean = 0;
                    for (int64_t i = 0; i < S; ++i) mean += in[i];
                    mean /= static_cast<T>(S);
                    T var = 0;
                    for (int64_t i = 0; i < S; ++i) var += (in[i] - mean) * (in[i] - mean);
                    var /= static_cast<T>(S);
                    T inv = T(1) / std::sqrt(var + eps);
                    for (int64_t i = 0; i < S; ++i) xhat[i] = (in[i] - mean) * inv;
                    if (xn->requires_grad) {
                        T m1 = 0, m2 = 0;
                        for (int64_t c = 0; c < cg; ++c) {
                            T gc = pg[gidx * cg + c];
                            for (int64_t i = 0; i < hw; ++i) {
                                T dyh = gr[c * hw + i] * gc;
                                m1 += dyh;
                                m2 += dyh * xhat[c * hw + i];
                            }
                        }
                        m1 /= static_cast<T>(S);
                        m2 /= static_cast<T>(S);
                        T* dx = xn->grad.data() + base;
                        for (int64_t c = 0; c < cg; ++c) {
                            T gc = pg[gidx * cg + c];
                            for (int64_t i = 0; i < hw; ++i)
                                dx[c * hw + i] +=
                                    inv * (gr[c * hw + i] * gc - m1 - xhat[c * hw + i] * m2);
                        }
                    }
                    if (gn->requires_grad) {
                        T* dg = gn->grad.data();
                        for (int64_t c = 0; c < cg; ++c) {
                            T acc = 0;
                            for (int64_t i = 0; i < hw; ++i) acc += gr[c * hw + i] * xhat[c * hw + i];
                            dg[gidx * cg + c] += acc;
                        }
                    }
                    if (bn->requires_grad) {
                        T* db = bn->grad.data();
                        for (int64_t c = 0; c < cg; ++c) {
                            T acc = 0;
                            for (int64_t i = 0; i < hw; ++i) acc += gr[c * hw + i];
                            db[gidx * cg + c] += acc;
                        }
                    }
                }
        });
}

}  // namespace gsu::ten
