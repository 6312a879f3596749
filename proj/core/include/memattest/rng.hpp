#pragma once

#include <cstdint>
#include <random>

namespace memattest {

// Deterministic RNG for trace/scenario generation. Bounded draws avoid
// std::uniform_int_distribution, whose output is not pinned by the standard,
// so the same seed yields the same scenario on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform-ish draw in [0, bound). Modulo bias is negligible for the
    // small bounds used by the generators.
    uint64_t below(uint64_t bound) { return bound == 0 ? 0 : engine_() % bound; }

    uint64_t in_range(uint64_t lo, uint64_t hi_inclusive) {
        return lo + below(hi_inclusive - lo + 1);
    }

    bool chance(uint32_t numerator, uint32_t denominator) {
        return below(denominator) < numerator;
    }

private:
    std::mt19937_64 engine_;
};

// SplitMix64, used to derive independent per-run seeds from a master seed.
inline uint64_t split_seed(uint64_t master, uint64_t index) {
    uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace memattest
