#pragma once

#include <cstdint>

namespace unitsel {

// splitmix64 finalizer. All seeded randomness in this library (synthetic
// data, jitter y-values, unit sampling) derives from this mix so outputs are
// identical across platforms and independent of std library RNG details.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

/// Uniform double in [0, 1) from a hash value.
inline double unit_interval(uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Counter-based deterministic stream; cheap to fork per unit.
class SplitMix {
public:
    explicit SplitMix(uint64_t seed) : state_(seed) {}
    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }
    double next_unit() { return unit_interval(next()); }
    /// Uniform integer in [0, bound) (bound > 0), rejection-free modulo use
    /// is fine at our scales.
    uint64_t next_below(uint64_t bound) { return next() % bound; }

private:
    uint64_t state_;
};

}  // namespace unitsel
