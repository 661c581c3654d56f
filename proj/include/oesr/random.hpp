#pragma once

#include <cstdint>

namespace oesr {

/// splitmix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based uniform draw in (0, 1): depends only on (seed, counter).
constexpr double uniform_from_counter(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t bits = splitmix64(splitmix64(seed) ^ splitmix64(counter ^ 0x5851f42d4c957f2dULL));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Derived stream seed.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x2545f4914f6cdd1dULL));
}

} // namespace oesr
