#pragma once

#include <cstdint>

namespace easycache {

/// SplitMix64 step; used to expand seeds and to mix seed components.
std::uint64_t splitmix64(std::uint64_t& state);

/// Combines two seed components into one well-mixed 64-bit seed.
std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b);

/// xoshiro256** (Blackman & Vigna), state expanded from the seed with
/// SplitMix64. Normals use the Marsaglia polar method. The integer stream is
/// identical on every platform; normals additionally depend on std::log and
/// std::sqrt (sqrt is correctly rounded, log is from the platform libm).
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double normal();

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace easycache
