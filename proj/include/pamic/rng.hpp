#pragma once

#include <cstdint>
#include <random>

namespace pamic {

/// Seeded generator with distributions written out explicitly.
///
/// The standard distribution classes are implementation-defined, so datasets,
/// splits and initial weights would differ between standard libraries. The
/// engine itself (mt19937_64) is fully specified; only the mapping from raw
/// words to values lives here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), unbiased (rejection on the top partial block).
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent stream seeds from (seed, tag).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace pamic
