#pragma once

#include <cstdint>

namespace gsu::kern {

// Flat-array kernels behind the tensor ops. Two f32 implementations exist:
// a scalar reference and an AVX2 variant, selected once at runtime. The two
// must produce bit-identical results, which constrains the design:
//
//  - no FMA anywhere (the build also disables fp contraction),
//  - per-output accumulation order is part of each kernel's contract,
//  - dot() uses a fixed 8-way interleaved partial-sum scheme with a
//    pairwise combine: lanes v[j] accumulate elements j, j+8, j+16, ...;
//    the result is ((v0+v4)+(v2+v6)) + ((v1+v5)+(v3+v7)).
//
// f64 has only the scalar implementation (64-bit mode is test/gradcheck
// only), so the same table shape is reused with scalar entries.
template <class T>
struct Table {
    const char* name;

    void (*add)(const T* a, const T* b, T* out, int64_t n);
    void (*sub)(const T* a, const T* b, T* out, int64_t n);
    void (*mul)(const T* a, const T* b, T* out, int64_t n);
    void (*div)(const T* a, const T* b, T* out, int64_t n);

    void (*add_s)(const T* a, T s, T* out, int64_t n);
    void (*mul_s)(const T* a, T s, T* out, int64_t n);
    void (*div_s)(const T* a, T s, T* out, int64_t n);   // out = a / s
    void (*rdiv_s)(const T* a, T s, T* out, int64_t n);  // out = s / a
    void (*rsub_s)(const T* a, T s, T* out, int64_t n);  // out = s - a

    // out = alpha * x + beta * y
    void (*axpby)(T alpha, const T* x, T beta, const T* y, T* out, int64_t n);
    // y += alpha * x   (matmul/conv inner loop; in-order accumulation)
    void (*saxpy)(T alpha, const T* x, T* y, int64_t n);
    // dst += x * y  (elementwise; product-backward accumulation)
    void (*madd)(const T* x, const T* y, T* dst, int64_t n);
    // out = m * a + (1 - m) * b, m binary
    void (*lerp_mask)(const T* m, const T* a, const T* b, T* out, int64_t n);
    void (*clamp)(const T* a, T lo, T hi, T* out, int64_t n);

    // Fixed-order reduction, see scheme above.
    T (*dot)(const T* a, const T* b, int64_t n);
};

template <class T>
const Table<T>& scalar_table();

// Null when the binary was built without AVX2 or the CPU lacks it.
const Table<float>* avx2_table();

enum class SimdMode { Auto, Scalar, Avx2 };

// Mode resolution: explicit set_simd_mode() wins, then the GSU_SIMD
// environment variable ("scalar" / "avx2"), then CPU detection.
void set_simd_mode(SimdMode mode);
SimdMode simd_mode();

template <class T>
const Table<T>& active();

const char* active_name_f32();

}  // namespace gsu::kern
