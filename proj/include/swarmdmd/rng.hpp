#pragma once

#include <cstdint>
#include <random>

namespace swarmdmd {

// Thin wrapper over mt19937_64 whose derived draws are defined bit-exactly
// here instead of relying on the standard library's distributions, whose
// algorithms are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer on [0, n), rejection sampled (no modulo bias).
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw = engine_();
        while (draw >= limit) {
            draw = engine_();
        }
        return draw % n;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace swarmdmd
