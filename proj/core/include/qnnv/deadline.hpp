#pragma once

#include <chrono>

namespace qnnv {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

inline Deadline no_deadline() { return Deadline::max(); }

// A non-positive budget yields a deadline that has already passed.
inline Deadline deadline_after(double seconds) {
  if (seconds <= 0) return Clock::now() - std::chrono::nanoseconds(1);
  if (seconds > 1e9) return no_deadline();
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

inline bool expired(Deadline d) { return d != no_deadline() && Clock::now() >= d; }

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace qnnv
