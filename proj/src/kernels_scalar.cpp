#include "gsu/kernels.hpp"

namespace gsu::kern {
namespace {

template <class T>
void k_add(const T* a, const T* b, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] + b[i];
}
template <class T>
void k_sub(const T* a, const T* b, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] - b[i];
}
template <class T>
void k_mul(const T* a, const T* b, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] * b[i];
}
template <class T>
void k_div(const T* a, const T* b, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] / b[i];
}
template <class T>
void k_add_s(const T* a, T s, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] + s;
}
template <class T>
void k_mul_s(const T* a, T s, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] * s;
}
template <class T>
void k_div_s(const T* a, T s, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = a[i] / s;
}
template <class T>
void k_rdiv_s(const T* a, T s, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = s / a[i];
}
template <class T>
void k_rsub_s(const T* a, T s, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = s - a[i];
}
template <class T>
void k_axpby(T alpha, const T* x, T beta, const T* y, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = alpha * x[i] + beta * y[i];
}
template <class T>
void k_saxpy(T alpha, const T* x, T* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}
template <class T>
void k_madd(const T* x, const T* y, T* dst, int64_t n) {
    for (int64_t i = 0; i < n; ++i) dst[i] = dst[i] + x[i] * y[i];
}
template <class T>
void k_lerp_mask(const T* m, const T* a, const T* b, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) o[i] = m[i] * a[i] + (T(1) - m[i]) * b[i];
}
template <class T>
void k_clamp(const T* a, T lo, T hi, T* o, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        T v = a[i];
        o[i] = v < lo ? lo : (v > hi ? hi : v);
    }
}

// Reference for the fixed 8-lane interleaved dot contract.
template <class T>
T k_dot(const T* a, const T* b, int64_t n) {
    T v[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int64_t n8 = n & ~int64_t(7);
    for (int64_t i = 0; i < n8; i += 8)
        for (int j = 0; j < 8; ++j) v[j] = v[j] + a[i + j] * b[i + j];
    for (int64_t i = n8; i < n; ++i) v[i - n8] = v[i - n8] + a[i] * b[i];
    T s04 = v[0] + v[4], s26 = v[2] + v[6];
    T s15 = v[1] + v[5], s37 = v[3] + v[7];
    return (s04 + s26) + (s15 + s37);
}

template <class T>
constexpr Table<T> make_scalar_table() {
    return Table<T>{
        "scalar", k_add<T>,    k_sub<T>,   k_mul<T>,       k_div<T>,   k_add_s<T>,
        k_mul_s<T>, k_div_s<T>, k_rdiv_s<T>, k_rsub_s<T>, k_axpby<T>, k_saxpy<T>,
        k_madd<T>, k_lerp_mask<T>, k_clamp<T>, k_dot<T>,
    };
}

const Table<float> kScalarF32 = make_scalar_table<float>();
const Table<double> kScalarF64 = make_scalar_table<double>();

}  // namespace

template <>
const Table<float>& scalar_table<float>() { return kScalarF32; }
template <>
const Table<double>& scalar_table<double>() { return kScalarF64; }

}  // namespace gsu::kern
