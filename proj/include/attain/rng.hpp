#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "attain/fields.hpp"

namespace attain {

/// Counter-based generator: every draw is a pure function of (key, counter),
/// so draw i of a stream is independent of how draws 0..i-1 were consumed and
/// streams derived from distinct key paths never collide. Experiment trials
/// and solver restarts key their streams by (seed, trial/restart, purpose),
/// which makes runs reproducible under reordering and parallel execution.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(mix(seed + kPhi)) {}

    /// Derives an independent substream; chainable.
    CounterRng stream(std::uint64_t id) const {
        CounterRng r(*this);
        r.key_ = mix(r.key_ ^ mix(id + kPhi));
        r.counter_ = 0;
        return r;
    }

    std::uint64_t next_u64() { return at(counter_++); }

    /// Uniform in (0, 1), never exactly 0 so log() is safe.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; two uniforms per draw, no carried state.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Independent standard normal real and imaginary parts.
    Cx cgaussian() {
        double re = gaussian();
        double im = gaussian();
        return Cx(re, im);
    }

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t index(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % bound;
    }

    /// First k entries of a seeded Fisher-Yates pass over [0, n).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(index(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t at(std::uint64_t counter) const {
        return mix(mix(key_ + counter * kPhi) ^ counter);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace attain
