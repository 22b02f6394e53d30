#pragma once

#include <cstdint>
#include <random>

namespace difsim {

// splitmix64, used to derive independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t state, std::uint64_t salt) {
    std::uint64_t z = state + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-owner random stream. Every stochastic component (node, model, run)
// owns one of these, so stepping order never leaks randomness across owners.
class RandomStream {
public:
    RandomStream() : engine_(0) {}
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    bool bernoulli(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return uniform() < p;
    }

    // integer in [0, n)
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace difsim
