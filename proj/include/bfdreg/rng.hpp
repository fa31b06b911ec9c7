#pragma once

#include <cstdint>

// Deterministic random numbers.  The standard <random> distributions are
// implementation-defined, which would break the bit-identical-output
// guarantees of the experiment drivers, so the generator and the Gaussian
// transform are fixed here.

namespace bfdreg {

// splitmix64: tiny, well-mixed, identical everywhere.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller (no cached spare; deterministic)
    double gaussian();
};

// Stable mixing of a base seed with a row/stream index, used to derive
// independent per-row noise streams from one experiment seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace bfdreg
