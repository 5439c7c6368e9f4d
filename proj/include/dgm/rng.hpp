#pragma once

#include <cmath>
#include <cstdint>

namespace dgm {

// Counter-based splittable generator (SplitMix64 over an incrementing
// counter). Each instance is an independent stream; split() derives a new
// stream deterministically from (key, stream id) without touching the
// parent's state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kGolden)), counter_(0) {}

    Rng split(std::uint64_t stream) const {
        Rng child(0);
        child.key_ = mix(key_ + kGolden * (stream + 1));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in the open interval (0, 1); safe inside -log(-log q).
    double uniform_open() {
        constexpr double eps = 1e-12;
        return (uniform() + eps) / (1.0 + 2.0 * eps);
    }

    // Standard normal via Box-Muller (no state caching, fully deterministic).
    double gauss() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace dgm
