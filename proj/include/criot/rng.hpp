#pragma once

#include <cmath>
#include <cstdint>

namespace criot {

/// SplitMix64 (Steele, Lea, Flood 2014). Used to expand seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman, Vigna). All variates are derived here from raw
/// 64-bit outputs so a seed reproduces bit-identical streams on any platform.
class Xoshiro256 {
public:
    static constexpr const char* kName = "xoshiro256**";

    explicit Xoshiro256(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Exponential variate with the given rate; +inf when rate is 0.
    double exponential(double rate) noexcept {
        if (!(rate > 0.0)) return INFINITY;
        return -std::log1p(-uniform()) / rate;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

/// Seed of an independent sub-stream (replication, grid point, source state).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 sm(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    sm.next();
    return sm.next();
}

}  // namespace criot
