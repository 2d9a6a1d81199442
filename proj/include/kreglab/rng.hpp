#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>

namespace kreglab {

// SplitMix64 (Steele/Lea/Flood reference constants).  Every randomized
// operation in the library draws from this generator so that a given seed
// produces the same stream on every platform; the standard library
// distributions are deliberately avoided because their output is
// implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, bound), unbiased via rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        assert(bound > 0);
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            const std::uint64_t x = next();
            if (x >= threshold) return x % bound;
        }
    }

    // Standard normal, Box-Muller cosine branch (two draws per variate).
    double next_normal() {
        double u1 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::uint64_t state_;
};

}  // namespace kreglab
