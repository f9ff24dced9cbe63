#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "affect/core/message.hpp"
#include "affect/core/time.hpp"

namespace affect {

enum class WindowAlignment { wall_clock, first_message };

struct WindowSpec {
  Duration length = std::chrono::seconds(1);
  Duration hop = std::chrono::seconds(1);
  WindowAlignment alignment = WindowAlignment::wall_clock;

  void validate() const {
    if (length <= Duration::zero()) throw std::invalid_argument("window length must be positive");
    if (hop <= Duration::zero()) throw std::invalid_argument("window hop must be positive");
    if (hop > length) throw std::invalid_argument("window hop must not exceed length");
  }
};

/// floor(a / b) for signed integers with b > 0.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

/// Start of the earliest window (origin + k*hop) that still contains `t`.
constexpr Timestamp first_window_containing(Timestamp t, Timestamp origin, const WindowSpec& spec) {
  const std::int64_t rel = to_micros(t) - to_micros(origin);
  const std::int64_t k = floor_div(rel - spec.length.count(), spec.hop.count()) + 1;
  return origin + spec.hop * k;
}

template <class T>
struct WindowContents {
  Timestamp start;
  Timestamp end;
  std::vector<Message<T>> messages;
};

/// Assigns an ordered message sequence to fixed-length (possibly
/// overlapping) windows and releases each window once the watermark
/// guarantees no later message can fall inside it.
template <class T>
class WindowBuffer {
public:
  explicit WindowBuffer(WindowSpec spec) : spec_(spec) { spec_.validate(); }

  void push(Message<T> m) {
    if (!next_start_) {
      const Timestamp origin =
          spec_.alignment == WindowAlignment::first_message ? m.originating_time() : Timestamp{};
      next_start_ = first_window_containing(m.originating_time(), origin, spec_);
    }
    last_time_ = m.originating_time();
    buffer_.push_back(std::move(m));
  }

  /// Windows whose end is at or before `watermark`.
  std::vector<WindowContents<T>> advance(Timestamp watermark) {
    std::vector<WindowContents<T>> out;
    while (next_start_ && *next_start_ + spec_.length <= watermark) out.push_back(pop_window());
    return out;
  }

  /// Remaining windows that contain at least the last observed message.
  std::vector<WindowContents<T>> finish() {
    std::vector<WindowContents<T>> out;
    while (next_start_ && last_time_ && *next_start_ <= *last_time_) out.push_back(pop_window());
    return out;
  }

  const WindowSpec& spec() const { return spec_; }

private:
  WindowContents<T> pop_window() {
    const Timestamp start = *next_start_;
    const Timestamp end = start + spec_.length;
    WindowContents<T> w{start, end, {}};
    for (const auto& m : buffer_) {
      if (m.originating_time() >= end) break;
      if (m.originating_time() >= start) w.messages.push_back(m);
    }
    *next_start_ += spec_.hop;
    while (!buffer_.empty() && buffer_.front().originating_time() < *next_start_) buffer_.pop_front();
    return w;
  }

  WindowSpec spec_;
  std::optional<Timestamp> next_start_;
  std::optional<Timestamp> last_time_;
  std::deque<Message<T>> buffer_;
};

}  // namespace affect
