#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "affect/core/time.hpp"
#include "json.hpp"

namespace affect::context {

enum class AppEventKind { start, close, minimize, maximize, foreground };

std::string_view to_string(AppEventKind kind);
std::optional<AppEventKind> parse_app_event_kind(std::string_view name);

struct Bounds {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool operator==(const Bounds&) const = default;
};

/// The raw window title never reaches this type; only its salted hash.
struct AppEvent {
  std::string app_name;
  std::string window_title_hash;  // hex, empty when the log had no title
  Bounds bounds;
  AppEventKind event = AppEventKind::foreground;
  bool operator==(const AppEvent&) const = default;
};

struct CalendarEvent {
  int attendee_count = 1;
  Timestamp start_time{};
  Duration duration{};
  bool is_remote = false;

  bool overlaps(Timestamp from, Timestamp to) const { return start_time < to && from < start_time + duration; }
  bool operator==(const CalendarEvent&) const = default;
};

/// Only the score of a sent email; body, subject and addresses are not kept.
struct EmailSendEvent {
  double sentiment_score = 0.5;
  Timestamp send_time{};
  bool operator==(const EmailSendEvent&) const = default;
};

enum class InputDevice { keyboard, mouse };

/// Occurrence of a key or mouse event; no key codes or positions.
struct RawInputEvent {
  InputDevice device = InputDevice::keyboard;
  bool operator==(const RawInputEvent&) const = default;
};

struct InputActivity {
  bool keyboard_active = false;
  bool mouse_active = false;
  Timestamp window_time{};  // window start
  bool operator==(const InputActivity&) const = default;
};

using ContextPayload = std::variant<AppEvent, CalendarEvent, EmailSendEvent, RawInputEvent>;

struct ContextEvent {
  Timestamp time{};
  ContextPayload payload;
  bool operator==(const ContextEvent&) const = default;
};

nlohmann::ordered_json to_json(const AppEvent& e);
nlohmann::ordered_json to_json(const CalendarEvent& e);

}  // namespace affect::context
