#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace ltv {

// Deterministic splitmix64 stream. Hand-rolled so that identical seeds give
// identical sequences on every platform and build; std::normal_distribution
// and friends make no such promise.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent stream for (seed, stream_id), used to parallelize sample
    // generation without sharing generator state.
    static Rng for_stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(mix64(seed ^ mix64(stream_id + 0x9E3779B97F4A7C15ULL)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Standard normal, Box-Muller with one cached value.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586477 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    static std::uint64_t mix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Deterministic Fisher-Yates shuffle of an index vector.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace ltv
