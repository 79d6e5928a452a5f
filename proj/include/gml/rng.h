#pragma once
#include <cstdint>

// counter-based random streams: every draw is a pure function of (seed, counter),
// so results do not depend on call order or thread count.

namespace gml {

inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// derived stream for (cell, trial) style indexing
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
    return hash_combine(hash_combine(master, a), b);
}

// uniform in [0,1)
inline double rng_uniform(uint64_t seed, uint64_t counter) {
    return double(mix64(seed ^ mix64(counter ^ 0x5851f42d4c957f2dULL)) >> 11) * 0x1.0p-53;
}

// standard normal via box-muller; each counter value is an independent draw
double rng_normal(uint64_t seed, uint64_t counter);

// stateful convenience wrapper over the counter stream
struct RngStream {
    uint64_t seed = 0;
    uint64_t counter = 0;
    explicit RngStream(uint64_t s) : seed(s) {}
    double uniform() { return rng_uniform(seed, counter++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return rng_normal(seed, counter++); }
};

} // namespace gml
