#pragma once

// Deterministic random streams for instance generation.  A SplitMix64 state
// per stream, derived from (seed, stream id), so each matrix or vector of an
// instance draws from its own stream and reordering one does not disturb the
// others.  Doubles come from the high 53 bits; normals via Box-Muller.

#include <cmath>
#include <cstdint>

namespace ucfeas {

struct Rng {
    std::uint64_t state = 0;
    bool has_spare = false;
    double spare = 0.0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        Rng r;
        r.state = mix(seed ^ mix(stream_id * 0xD1342543DE82EF95ULL + 1));
        return r;
    }

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    std::uint64_t below(std::uint64_t k) { return next_u64() % k; }

    bool coin() { return (next_u64() >> 63) != 0; }

    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        // u1 in (0, 1] keeps the log finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare = r * std::sin(a);
        has_spare = true;
        return r * std::cos(a);
    }
};

}  // namespace ucfeas
