#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace emea {

// All randomness in the engine flows through this wrapper so that runs are
// reproducible byte-for-byte. std:: distributions are implementation-defined,
// so the few draws we need are spelled out here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    // Uniform real in [0, 1).
    double uniform_real() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (one value per call; cache the pair).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_real();
        double u2 = uniform_real();
        while (u1 <= 0.0) u1 = uniform_real();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    // Derive an independent stream for a named phase, without consuming draws
    // from this stream. Splits the root seed so modules cannot perturb each
    // other's sequences.
    Rng fork(std::uint64_t phase) const {
        std::uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL * (phase + 1));
        // splitmix64 finalizer
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return Rng(x);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace emea
