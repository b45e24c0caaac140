// Counter-based RNG (Philox4x64-10) for reproducible, order-independent
// Monte Carlo. Every (seed, stream, index) triple maps to a fixed draw, so
// path-parallel simulation gives identical results for any worker count.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace recmfg {

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b,
                      std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 prod =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(prod >> 64);
    lo = static_cast<std::uint64_t>(prod);
}

} // namespace detail

struct Philox4x64 {
    static constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

    // One 10-round block: ctr (4x64) x key (2x64) -> 4x64.
    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                              std::array<std::uint64_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi0, lo0, hi1, lo1;
            detail::mulhilo64(kM0, ctr[0], hi0, lo0);
            detail::mulhilo64(kM1, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }
};

// Stateless draw: the i-th 64-bit word of the stream identified by
// (seed, stream). Words 4n..4n+3 come from counter block n.
inline std::uint64_t rng_word(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index) {
    const auto out = Philox4x64::block({stream, index >> 2, 0, 0},
                                       {seed, 0x7265636d666721ULL});
    return out[index & 3];
}

// Uniform in (0,1): 53-bit mantissa, never exactly 0 or 1.
inline double rng_uniform(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
    const std::uint64_t w = rng_word(seed, stream, index);
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller; indices 2n and 2n+1 share one transform.
inline double rng_normal(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index) {
    const std::uint64_t pair = index >> 1;
    const double u1 = rng_uniform(seed, stream, 2 * pair);
    const double u2 = rng_uniform(seed, stream, 2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

// Per-purpose stream ids keep sub-population / path / replication streams
// from colliding: top byte tags the consumer, low bits index within it.
enum class StreamPurpose : std::uint64_t {
    MeanField = 1,
    Population = 2,
    Principal = 3,
    Deviation = 4,
    InitialInventory = 5,
};

inline std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t subpop,
                               std::uint64_t item) {
    return (static_cast<std::uint64_t>(purpose) << 56) | (subpop << 48) | item;
}

} // namespace recmfg
