#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace flowguard {

/// SplitMix64: a 64-bit counter-based generator. The i-th output of a stream
/// seeded with s is mix(s + (i + 1) * 0x9E3779B97F4A7C15), where mix is the
/// finalizer below. All derived draws (uniform, normal, index) are defined
/// here rather than by <random> distributions, whose algorithms are
/// implementation-specific, so a seed reproduces the same values everywhere.
class SplitMix64 {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    [[nodiscard]] static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Seed for an independent sub-stream identified by `tag`.
    [[nodiscard]] static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) noexcept {
        return mix(seed ^ mix(tag + kGamma));
    }

    constexpr std::uint64_t next_u64() noexcept {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Multiply-shift reduction; n must be > 0.
    std::size_t index(std::size_t n) noexcept {
        __extension__ using u128 = unsigned __int128;
        const auto wide = static_cast<u128>(next_u64()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    /// Standard normal via Box-Muller (one draw per call, two uniforms consumed).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace flowguard
