#include "bfdreg/rng.hpp"

#include <cmath>

namespace bfdreg {

double Rng::gaussian() {
    // Box-Muller on two fresh uniforms; u1 is kept away from 0.
    double u1, u2;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed ^ (0x632be59bd9b4e019ULL + index * 0x9e3779b97f4a7c15ULL));
    return r.next_u64();
}

}  // namespace bfdreg
