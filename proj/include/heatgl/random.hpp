#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace heatgl {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent 64-bit key from a base seed and up to two indices.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept
{
    return splitmix64(splitmix64(splitmix64(seed) ^ a) + b);
}

/// Counter-based stream: the n-th output is a pure function of (key, n).
/// Satisfies UniformRandomBitGenerator so it also plugs into <random>.
class StreamRng
{
public:
    using result_type = std::uint64_t;

    explicit constexpr StreamRng(std::uint64_t key) noexcept : key_(splitmix64(key)) {}
    StreamRng(std::uint64_t seed, std::uint64_t i, std::uint64_t j) noexcept
        : StreamRng(derive_seed(seed, i, j))
    {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exponential(1) by inversion.
    double exponential() noexcept { return -std::log1p(-uniform()); }

    /// Uniform integer in [0, n), n >= 1 (Lemire multiply-shift, bias < 2^-32 for n < 2^32).
    std::uint32_t below(std::uint32_t n) noexcept
    {
        return static_cast<std::uint32_t>((((*this)() >> 32) * static_cast<std::uint64_t>(n)) >> 32);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace heatgl
