#include "gml/rng.h"

#include <cmath>

namespace gml {

double rng_normal(uint64_t seed, uint64_t counter) {
    // box-muller on two uniforms derived from the same counter; cosine branch only,
    // so each counter is one independent draw
    double u1 = rng_uniform(seed, 2 * counter);
    double u2 = rng_uniform(seed, 2 * counter + 1);
    double r = std::sqrt(-2.0 * std::log(1.0 - u1)); // 1-u1 in (0,1], log finite
    return r * std::cos(2.0 * M_PI * u2);
}

} // namespace gml
