// Deterministic, splittable pseudo-random source. splitmix64 core with a
// Box-Muller transform for normals, so streams are bit-reproducible across
// platforms and standard-library versions. Every published result records
// the family name and the seed that produced it.
#pragma once

#include <cmath>
#include <cstdint>

#include "errors.hpp"

namespace mislid {

class Rng {
public:
    static constexpr const char* family = "splitmix64-boxmuller";

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Decorrelated child seed for a numbered stream. The stream offset keeps
    // distinct indices distinct under a fixed base (odd gamma, then a
    // bijective mix), which is what makes per-run seeds collision-free.
    static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
        return mix(base + (stream + 1) * golden_gamma);
    }

    std::uint64_t next_u64() {
        state_ += golden_gamma;
        return mix(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; one sample per call, two uniforms burned.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Index in [0, n) drawn proportionally to the nonnegative weights w,
    // which are expected to sum to ~1. Rounding leftovers go to the last
    // positively weighted index.
    int categorical(const double* w, int n) {
        if (n <= 0) throw parameter_error("categorical: empty weight vector");
        const double u = uniform();
        double acc = 0.0;
        int last_pos = -1;
        for (int k = 0; k < n; ++k) {
            if (w[k] < 0.0) throw parameter_error("categorical: negative weight");
            if (w[k] > 0.0) last_pos = k;
            acc += w[k];
            if (u < acc) return k;
        }
        if (last_pos < 0) throw parameter_error("categorical: all weights zero");
        return last_pos;
    }

    int uniform_int(int n) {
        if (n <= 0) throw parameter_error("uniform_int: n must be positive");
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

private:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace mislid
