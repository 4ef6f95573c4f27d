#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace omnisonic {

// Counter-based deterministic generator built on the splitmix64 output
// function: draw k is mix64(seed + (k+1) * 0x9E3779B97F4A7C15). The stream
// depends only on (seed, draw index), so identical seeds give identical
// streams on every platform. Sub-streams are derived by hashing a tag into
// a fresh seed, never by sharing state.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {}

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_ + seed_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Unbiased integer in [0, n) via rejection.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Standard normal via Box-Muller; the spare value is cached so draws
    // come in deterministic pairs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent child stream; depends only on (seed, salt).
    Rng fork(uint64_t salt) const {
        return Rng(mix64(seed_ ^ mix64(salt + 0x632BE59BD9B4E019ull)));
    }

    Rng fork(std::string_view tag) const { return fork(fnv1a64(tag)); }

    static uint64_t mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static uint64_t fnv1a64(std::string_view s) {
        uint64_t h = 0xCBF29CE484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ull;
        }
        return h;
    }

private:
    uint64_t seed_ = 0;
    uint64_t state_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace omnisonic
