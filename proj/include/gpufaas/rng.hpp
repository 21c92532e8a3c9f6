#pragma once

#include <cstdint>
#include <random>

namespace gpufaas {

// mt19937_64 kept behind a thin wrapper. std::uniform_int_distribution and
// friends are implementation-defined, so every draw here is derived from raw
// engine output only; sequences are identical on any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, n). Modulo bias for n << 2^64 is far below
    // anything observable at this scale and keeps the draw deterministic.
    std::int64_t uniform_below(std::int64_t n) {
        return static_cast<std::int64_t>(gen_() % static_cast<std::uint64_t>(n));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace gpufaas
