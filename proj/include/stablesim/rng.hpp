#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <limits>

namespace stablesim {

// Stateless SplitMix64 finalizer; used to mix ids into stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ generator.  Small state, fast, and cheap to construct, so
// every (replica, row, role) tuple gets its own independently seeded
// instance and results do not depend on scheduling.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) {
        // SplitMix64 expansion, the seeding recommended for xoshiro.
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
        // All-zero state is invalid; cannot happen from SplitMix expansion
        // of distinct increments, but guard anyway.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~std::uint64_t{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on the open interval (0, 1); 53-bit resolution, never 0 or 1,
    // so logarithms of it are always finite.
    double uniform01() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on (lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    double exponential() { return -std::log(uniform01()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Derives the seed of an independent substream from a master seed and an
// id path such as {replica, row, role}.  Pure function of its arguments.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t id : ids) h = mix64(h ^ (id + 0x9e3779b97f4a7c15ULL));
    return h;
}

inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    return Rng(derive_seed(seed, ids));
}

// Number of Bernoulli(p) failures before the next success, by inversion.
// Returns +inf-like sentinel (> 2^62) cast to double when p underflows.
inline double geometric_skip(Rng& rng, double p) {
    if (p >= 1.0) return 0.0;
    if (p <= 0.0) return 0x1.0p63;
    // log(1-p) via log1p for tiny p.
    const double denom = std::log1p(-p);
    const double g = std::floor(std::log(rng.uniform01()) / denom);
    return g;
}

} // namespace stablesim
