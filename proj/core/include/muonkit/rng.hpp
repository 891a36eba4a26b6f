#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace muonkit {

/// splitmix64. All derived draws are defined bit-for-bit so datasets and
/// initializations can be regenerated outside this library.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Modulo bias is below 2^-40 for the sizes used here.
    std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double normal() noexcept {
        const double u1 = 1.0 - uniform();    // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

}    // namespace muonkit
