#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace prt {

// Simulation clock. Integer microseconds keep event ordering exact and make
// travel times identical under a common rescaling of lengths and speed.
using SimTime = std::chrono::microseconds;

inline SimTime from_seconds(double s) {
  return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

inline SimTime from_minutes(double m) { return from_seconds(m * 60.0); }

inline double to_seconds(SimTime t) { return static_cast<double>(t.count()) * 1e-6; }

inline double to_minutes(SimTime t) { return to_seconds(t) / 60.0; }

}  // namespace prt
