#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace isoprnu {

// Counter-based randomness: every sample is a pure function of (seed, stream, index),
// so renders are identical regardless of evaluation order or thread count.

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    return mix64(mix64(seed ^ mix64(stream * 0xd1b54a32d192ed03ULL)) + index * 0x9e3779b97f4a7c15ULL);
}

/// Uniform in the open interval (0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    return (static_cast<double>(counter_hash(seed, stream, index) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter draws.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const double u1 = counter_uniform(seed, stream, 2 * index);
    const double u2 = counter_uniform(seed, stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace stream {
inline constexpr std::uint64_t prnu = 1;
inline constexpr std::uint64_t exposure = 2;
inline constexpr std::uint64_t scene = 3;
inline constexpr std::uint64_t scene_texture = 4;
}  // namespace stream

}  // namespace isoprnu
