// AVX2 f32 kernels. This TU is compiled with -mavx2 and must only be
// reached after a runtime CPU check (see kernels.cpp). No FMA: results
// must be bit-identical to the scalar reference.
#include "gsu/kernels.hpp"

#if defined(GSU_BUILD_AVX2) && defined(__AVX2__)

#include <immintrin.h>

namespace gsu::kern {
namespace {

template <class VecOp, class ScalarOp>
inline void binary_loop(const float* a, const float* b, float* o, int64_t n,
                        VecOp vop, ScalarOp sop) {
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        _mm256_storeu_ps(o + i, vop(va, vb));
    }
    for (int64_t i = n8; i < n; ++i) o[i] = sop(a[i], b[i]);
}

void k_add(const float* a, const float* b, float* o, int64_t n) {
    binary_loop(a, b, o, n, [](__m256 x, __m256 y) { return _mm256_add_ps(x, y); },
                [](float x, float y) { return x + y; });
}
void k_sub(const float* a, const float* b, float* o, int64_t n) {
    binary_loop(a, b, o, n, [](__m256 x, __m256 y) { return _mm256_sub_ps(x, y); },
                [](float x, float y) { return x - y; });
}
void k_mul(const float* a, const float* b, float* o, int64_t n) {
    binary_loop(a, b, o, n, [](__m256 x, __m256 y) { return _mm256_mul_ps(x, y); },
                [](float x, float y) { return x * y; });
}
void k_div(const float* a, const float* b, float* o, int64_t n) {
    binary_loop(a, b, o, n, [](__m256 x, __m256 y) { return _mm256_div_ps(x, y); },
                [](float x, float y) { return x / y; });
}

void k_add_s(const float* a, float s, float* o, int64_t n) {
    __m256 vs = _mm256_set1_ps(s);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(o + i, _mm256_add_ps(_mm256_loadu_ps(a + i), vs));
    for (int64_t i = n8; i < n; ++i) o[i] = a[i] + s;
}
void k_mul_s(const float* a, float s, float* o, int64_t n) {
    __m256 vs = _mm256_set1_ps(s);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(o + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), vs));
    for (int64_t i = n8; i < n; ++i) o[i] = a[i] * s;
}
void k_div_s(const float* a, float s, float* o, int64_t n) {
    __m256 vs = _mm256_set1_ps(s);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(o + i, _mm256_div_ps(_mm256_loadu_ps(a + i), vs));
    for (int64_t i = n8; i < n; ++i) o[i] = a[i] / s;
}
void k_rdiv_s(const float* a, float s, float* o, int64_t n) {
    __m256 vs = _mm256_set1_ps(s);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(o + i, _mm256_div_ps(vs, _mm256_loadu_ps(a + i)));
    for (int64_t i = n8; i < n; ++i) o[i] = s / a[i];
}
void k_rsub_s(const float* a, float s, float* o, int64_t n) {
    __m256 vs = _mm256_set1_ps(s);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8)
        _mm256_storeu_ps(o + i, _mm256_sub_ps(vs, _mm256_loadu_ps(a + i)));
    for (int64_t i = n8; i < n; ++i) o[i] = s - a[i];
}

void k_axpby(float alpha, const float* x, float beta, const float* y, float* o, int64_t n) {
    __m256 va = _mm256_set1_ps(alpha), vb = _mm256_set1_ps(beta);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 t = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        __m256 u = _mm256_mul_ps(vb, _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(o + i, _mm256_add_ps(t, u));
    }
    for (int64_t i = n8; i < n; ++i) o[i] = alpha * x[i] + beta * y[i];
}

void k_saxpy(float alpha, const float* x, float* y, int64_t n) {
    __m256 va = _mm256_set1_ps(alpha);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 t = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), t));
    }
    for (int64_t i = n8; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void k_madd(const float* x, const float* y, float* dst, int64_t n) {
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 t = _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i), t));
    }
    for (int64_t i = n8; i < n; ++i) dst[i] = dst[i] + x[i] * y[i];
}

void k_lerp_mask(const float* m, const float* a, const float* b, float* o, int64_t n) {
    __m256 one = _mm256_set1_ps(1.0f);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 vm = _mm256_loadu_ps(m + i);
        __m256 t = _mm256_mul_ps(vm, _mm256_loadu_ps(a + i));
        __m256 u = _mm256_mul_ps(_mm256_sub_ps(one, vm), _mm256_loadu_ps(b + i));
        _mm256_storeu_ps(o + i, _mm256_add_ps(t, u));
    }
    for (int64_t i = n8; i < n; ++i) o[i] = m[i] * a[i] + (1.0f - m[i]) * b[i];
}

void k_clamp(const float* a, float lo, float hi, float* o, int64_t n) {
    __m256 vlo = _mm256_set1_ps(lo), vhi = _mm256_set1_ps(hi);
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 v = _mm256_loadu_ps(a + i);
        _mm256_storeu_ps(o + i, _mm256_min_ps(_mm256_max_ps(v, vlo), vhi));
    }
    for (int64_t i = n8; i < n; ++i) {
        float v = a[i];
        o[i] = v < lo ? lo : (v > hi ? hi : v);
    }
}

float k_dot(const float* a, const float* b, int64_t n) {
    __m256 acc = _mm256_setzero_ps();
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8) {
        __m256 t = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, t);
    }
    if (n8 < n) {
        alignas(32) float lanes[8];
        _mm256_store_ps(lanes, acc);
        for (int64_t i = n8; i < n; ++i) lanes[i - n8] = lanes[i - n8] + a[i] * b[i];
        acc = _mm256_load_ps(lanes);
    }
    // (v0+v4, v1+v5, v2+v6, v3+v7) -> pairwise combine, same tree as scalar.
    __m128 lo = _mm256_castps256_ps128(acc);
    __m128 hi = _mm256_extractf128_ps(acc, 1);
    __m128 s = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(s, s);       // (v2+v6, v3+v7, ...)
    __m128 p = _mm_add_ps(s, sh);          // (s04+s26, s15+s37, ...)
    __m128 q = _mm_shuffle_ps(p, p, 0x1);  // s15+s37 in lane 0
    return _mm_cvtss_f32(_mm_add_ss(p, q));
}

const Table<float> kAvx2F32 = {
    "avx2", k_add,  k_sub,   k_mul,    k_div,    k_add_s, k_mul_s, k_div_s,
    k_rdiv_s, k_rsub_s, k_axpby, k_saxpy, k_madd, k_lerp_mask, k_clamp, k_dot,
};

}  // namespace

const Table<float>* avx2_table_impl() { return &kAvx2F32; }

}  // namespace gsu::kern

#endif  // GSU_BUILD_AVX2 && __AVX2__
