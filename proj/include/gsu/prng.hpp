#pragma once

#include <cstdint>
#include <string_view>

namespace gsu::rng {

// Deterministic, platform-independent stream generator.
//
// A stream is keyed by a 64-bit seed plus a label path (strings and
// integers). Key derivation chains SplitMix64 finalizer steps over the
// absorbed parts, so (seed, "train", 7, "eps") and (seed, "train", 8, "eps")
// are unrelated streams. Draws advance an internal SplitMix64 sequence.
//
// Uniform doubles use the top 53 bits of a u64. Normal draws use the
// Box-Muller transform on consecutive uniform pairs:
//   z0 = sqrt(-2 ln u1) * cos(2 pi u2),  z1 = sqrt(-2 ln u1) * sin(2 pi u2)
// with u1 forced away from zero. The second value of each pair is cached.
class Stream {
public:
    explicit Stream(uint64_t seed) : state_(mix(seed ^ kInit)) {}

    Stream& absorb(uint64_t v) {
        state_ = mix(state_ ^ v);
        have_spare_ = false;
        return *this;
    }
    Stream& absorb(std::string_view label) { return absorb(fnv1a(label)); }
    Stream& absorb(int64_t v) { return absorb(static_cast<uint64_t>(v)); }
    Stream& absorb(int v) { return absorb(static_cast<uint64_t>(static_cast<int64_t>(v))); }

    template <class... Parts>
    static Stream of(uint64_t seed, Parts&&... parts) {
        Stream s(seed);
        (s.absorb(parts), ...);
        return s;
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix_z(state_);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n >= 1.
    uint64_t next_below(uint64_t n);

    // Standard normal draws (Box-Muller, pair-cached).
    double next_normal();
    float next_normal_f() { return static_cast<float>(next_normal()); }

    // Bernoulli(p) without floating comparison ambiguity at the ends.
    bool next_bernoulli(double p);

private:
    static constexpr uint64_t kInit = 0x6A09E667F3BCC908ULL;  // sqrt(2) fraction bits

    static uint64_t mix_z(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }
    static uint64_t mix(uint64_t z) { return mix_z(z + 0x9E3779B97F4A7C15ULL); }

    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gsu::rng
