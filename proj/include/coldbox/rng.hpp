#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace coldbox {

/// Derives an independent generator from (seed, stream name[, index]).
///
/// Everything random in the toolkit flows from one user-facing seed; each
/// consumer asks for a named sub-stream so adding a new consumer never
/// perturbs the draws of existing ones.
std::mt19937_64 substream(std::uint64_t seed, std::string_view name,
                          std::uint64_t index = 0);

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

inline std::mt19937_64 substream(std::uint64_t seed, std::string_view name,
                                 std::uint64_t index) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ detail::fnv1a(name));
    h = detail::splitmix64(h ^ index);
    return std::mt19937_64(h);
}

} // namespace coldbox
