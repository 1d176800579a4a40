#pragma once

#include <cstdint>
#include <limits>

namespace msl {

// SplitMix64 generator (Steele, Lea & Flood). Small state, full 64-bit
// output, satisfies UniformRandomBitGenerator so it can drive the standard
// <random> distributions.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// One avalanche round; used to fold stream coordinates into a seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream derivation: the generator for a given logical stream
// (e.g. filter seed x step x particle) depends only on its coordinates, not
// on how many draws other streams consumed.
inline SplitMix64 stream_rng(std::uint64_t seed, std::uint64_t a) {
    return SplitMix64(mix_seed(seed, a));
}
inline SplitMix64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return SplitMix64(mix_seed(mix_seed(seed, a), b));
}
inline SplitMix64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                             std::uint64_t c) {
    return SplitMix64(mix_seed(mix_seed(mix_seed(seed, a), b), c));
}

}  // namespace msl
