#ifndef ALOHADYN_RNG_HPP
#define ALOHADYN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace alohadyn {

/// One splitmix64 step. Advances `state` and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * Deterministic random stream (xoshiro256++ seeded via splitmix64).
 *
 * Every stochastic routine in the library consumes draws from one of these in
 * a documented order, so a (config, seed) pair reproduces results bit for bit
 * on any platform. Streams for independent replications are derived with
 * derive_stream(), never by splitting a running generator.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t st = seed;
        for (auto& word : s_) word = splitmix64(st);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

    /// Exact Poisson sample by the product method, chunked so the
    /// exp(-mean) threshold never underflows. Consumes a variable number of
    /// uniforms (mean + #chunks in expectation).
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean))
            throw std::invalid_argument("poisson: mean must be finite and >= 0");
        std::uint64_t n = 0;
        while (mean > 256.0) {
            n += poisson_product(256.0);
            mean -= 256.0;
        }
        return n + poisson_product(mean);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t poisson_product(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = 1.0;
        do {
            prod *= next_double();
            ++k;
        } while (prod > limit);
        return k - 1;
    }

    std::uint64_t s_[4];
};

/// Platform-independent seed for stream (master, tag, index). `tag`
/// separates the streams of different procedures run under one master seed,
/// `index` separates replications or sweep points.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t st = master;
    std::uint64_t h = splitmix64(st);
    st = h ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
    h = splitmix64(st);
    st = h ^ (0xBF58476D1CE4E5B9ULL * (index + 1));
    return splitmix64(st);
}

inline RandomStream derive_stream(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    return RandomStream(derive_seed(master, tag, index));
}

/// Fixed tags used by the built-in estimators and runners.
namespace stream_tag {
constexpr std::uint64_t point_process = 1;
constexpr std::uint64_t degrees = 2;
constexpr std::uint64_t nn_time = 3;
constexpr std::uint64_t opportunistic = 4;
constexpr std::uint64_t propagation = 5;
constexpr std::uint64_t percolation = 6;
constexpr std::uint64_t sweep = 7;
} // namespace stream_tag

} // namespace alohadyn

#endif
