#pragma once

#include <cstdint>
#include <random>

namespace btforge {

// Seeded random source with pinned draw algorithms. The standard
// distribution classes differ between standard libraries, so every draw
// here is derived from raw mt19937_64 output and reproduces bit-for-bit
// across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound], rejection-sampled so every value is
    // exactly equally likely.
    std::uint32_t uniform_u32(std::uint32_t bound) {
        const std::uint64_t range = static_cast<std::uint64_t>(bound) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return static_cast<std::uint32_t>(draw % range);
    }

    // Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::mt19937_64 engine_;
};

} // namespace btforge
