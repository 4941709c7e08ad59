#pragma once

#include <cstdint>

namespace dmimo::rng {

/// SplitMix64 step; the whole simulator draws through this so results do
/// not depend on standard-library distribution internals.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
    return splitmix64(s);
}

/// Counter-based substream: the state is derived from (seed, stream, index)
/// only, so trial i's draws are identical whether trials run serially or in
/// parallel, and streams with different purposes never share draws.
class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
        : state_(mix(mix(seed, stream), index)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform over {0, ..., n-1}. Plain modulo; fine for the small n used here.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller, one cached value.
    double normal();

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace dmimo::rng
