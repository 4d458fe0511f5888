#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "racig/errors.hpp"

namespace racig {

// SplitMix64 (Vigna's fixed-increment variant of SplittableRandom).
// Every random quantity in the project flows through this generator so
// fixtures and reports are bit-reproducible across runs and platforms.
struct SplitMix64 {
    uint64_t state = 0;

    SplitMix64() = default;
    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += UINT64_C(0x9E3779B97F4A7C15));
        z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
        return z ^ (z >> 31);
    }

    // 53-bit mantissa mapping, value in [0, 1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Standard normal via Box-Muller; consumes exactly two raw draws.
    double next_gaussian() {
        double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Unbiased integer in [0, n) by rejection sampling.
    uint64_t next_below(uint64_t n) {
        if (n == 0) {
            throw RangeError("next_below: n must be positive");
        }
        // 2^64 mod n; draws at or above 2^64 - r are rejected.
        uint64_t r = (std::numeric_limits<uint64_t>::max() % n + 1) % n;
        uint64_t x;
        do {
            x = next();
        } while (x > std::numeric_limits<uint64_t>::max() - r);
        return x % n;
    }
};

// FNV-1a 64-bit hash, used by the deterministic encoder stubs.
inline uint64_t fnv1a64(const char* data, size_t len) {
    uint64_t h = UINT64_C(14695981039346656037);
    for (size_t i = 0; i < len; i++) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= UINT64_C(1099511628211);
    }
    return h;
}

}  // namespace racig
