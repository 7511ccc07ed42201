#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

namespace pasem {

// Seeded random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniform and Gaussian variates are derived here (not through
// <random> distributions, whose algorithms are implementation-defined), so a
// given seed yields the same samples on every platform and release.
//
// Splitting: a stream is identified by (seed, stream id); sample index i of a
// stream belongs to chunk i / kChunkSize, and each chunk runs its own engine
// seeded with mix(seed, stream, chunk). Any partition of the chunks across
// threads therefore produces identical output.

inline constexpr std::size_t kChunkSize = 4096;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk = 0)
{
    return mix64(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ull)) ^ chunk);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Pair of independent standard normals (Box-Muller).
    std::pair<double, double> normal_pair();

private:
    std::mt19937_64 engine_;
};

} // namespace pasem
