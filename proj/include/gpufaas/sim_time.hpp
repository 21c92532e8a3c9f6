#pragma once

#include <cmath>
#include <cstdint>

namespace gpufaas {

// Simulated time is integer microseconds so results are bit-exact across
// platforms. Catalog files carry seconds; convert once at the boundary.
using SimTime = std::int64_t;

inline constexpr SimTime kMicrosPerSecond = 1'000'000;
inline constexpr SimTime kMicrosPerMinute = 60 * kMicrosPerSecond;

inline SimTime seconds_to_us(double seconds) {
    return static_cast<SimTime>(std::llround(seconds * 1e6));
}

inline double us_to_seconds(SimTime t) {
    return static_cast<double>(t) / 1e6;
}

}  // namespace gpufaas
