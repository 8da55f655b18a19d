#pragma once

#include <cstdint>
#include <random>

namespace cklur {

// Deterministic random source.  All randomized components (probe restarts,
// instance generators, property tests) draw from this wrapper so that a fixed
// seed yields bit-identical runs on every platform: doubles are produced by
// the explicit 53-bit construction rather than std::uniform_real_distribution,
// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).  n must be positive.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling keeps the distribution exact and deterministic.
        std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    int next_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Derive an independent stream, e.g. one per parallel restart.  The mixing
    // constants are the SplitMix64 finalizer so nearby indices decorrelate.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cklur
