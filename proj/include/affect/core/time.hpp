#pragma once

#include <chrono>
#include <cstdint>
#include <limits>

namespace affect {

/// Clock that stamps sensor captures. Backed by the steady clock so live
/// sessions never observe wall-clock jumps; replayed sessions supply their
/// own recorded times on the same axis.
struct SessionClock {
  using rep = std::int64_t;
  using period = std::micro;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SessionClock>;
  static constexpr bool is_steady = true;

  static time_point now() noexcept {
    return time_point(std::chrono::duration_cast<duration>(
        std::chrono::steady_clock::now().time_since_epoch()));
  }
};

using Duration = SessionClock::duration;
using Timestamp = SessionClock::time_point;

constexpr Timestamp from_micros(std::int64_t us) { return Timestamp(Duration(us)); }
constexpr std::int64_t to_micros(Timestamp t) { return t.time_since_epoch().count(); }
constexpr std::int64_t to_micros(Duration d) { return d.count(); }

inline constexpr Timestamp kTimeMin = Timestamp(Duration(std::numeric_limits<std::int64_t>::min()));
inline constexpr Timestamp kTimeMax = Timestamp(Duration(std::numeric_limits<std::int64_t>::max()));

constexpr double to_seconds(Duration d) { return static_cast<double>(d.count()) * 1e-6; }
constexpr Duration seconds_to_duration(double s) {
  return Duration(static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5)));
}

}  // namespace affect
