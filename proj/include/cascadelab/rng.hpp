#pragma once

#include <cstdint>
#include <random>

namespace cascadelab {

// splitmix64 round; used only for seed derivation, never for sampling.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-mode seed split: (master, stream, counter) -> 64-bit seed.
// Results are a pure function of the triple, so any parallel schedule that
// assigns work unit `counter` of stream `stream` gets identical randomness.
inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t counter) {
    uint64_t h = splitmix64(master ^ splitmix64(stream));
    return splitmix64(h ^ splitmix64(counter));
}

// Sampling engine: mt19937_64 with 53-bit uniforms in [0,1).
struct rng {
    explicit rng(uint64_t seed) : eng(seed) {}
    uint64_t next() { return eng(); }
    double u01() { return double(eng() >> 11) * 0x1.0p-53; }
    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        std::uniform_int_distribution<uint64_t> d(0, n - 1);
        return d(eng);
    }
    std::mt19937_64 eng;
};

}  // namespace cascadelab
