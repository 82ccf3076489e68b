#include "gsu/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace gsu::kern {

#if defined(GSU_BUILD_AVX2)
const Table<float>* avx2_table_impl();
#endif

const Table<float>* avx2_table() {
#if defined(GSU_BUILD_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? avx2_table_impl() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

std::atomic<SimdMode> g_mode{SimdMode::Auto};

const Table<float>* resolve_f32() {
    SimdMode m = g_mode.load(std::memory_order_relaxed);
    if (m == SimdMode::Auto) {
        if (const char* env = std::getenv("GSU_SIMD")) {
            if (std::strcmp(env, "scalar") == 0) m = SimdMode::Scalar;
            if (std::strcmp(env, "avx2") == 0) m = SimdMode::Avx2;
        }
    }
    if (m == SimdMode::Scalar) return &scalar_table<float>();
    const Table<float>* v = avx2_table();
    return v ? v : &scalar_table<float>();
}

}  // namespace

void set_simd_mode(SimdMode mode) { g_mode.store(mode, std::memory_order_relaxed); }
SimdMode simd_mode() { return g_mode.load(std::memory_order_relaxed); }

template <>
const Table<float>& active<float>() { return *resolve_f32(); }

template <>
const Table<double>& active<double>() { return scalar_table<double>(); }

const char* active_name_f32() { return active<float>().name; }

}  // namespace gsu::kern
