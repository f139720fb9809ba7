#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), so results do not depend on thread scheduling or on the
// order in which trials are evaluated.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hetvar::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3", SC'11). Output matches the Random123 reference.
inline Counter philox4x32_10(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
        const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

inline Key key_from_seed(std::uint64_t seed) noexcept {
    return {std::uint32_t(seed), std::uint32_t(seed >> 32)};
}

/// Maps 53 random bits to the open interval (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
    return (double(bits) + 0.5) * 0x1.0p-53;
}

/// Two independent uniforms in (0, 1) from one Philox block.
inline std::array<double, 2> uniform_pair(Counter ctr, Key key) noexcept {
    const Counter out = philox4x32_10(ctr, key);
    return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
}

/// Standard normal via the cosine branch of Box-Muller: exactly one Philox
/// block per variate, no rejection loop.
inline double standard_normal(Counter ctr, Key key) noexcept {
    const auto [u1, u2] = uniform_pair(ctr, key);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace hetvar::rng
