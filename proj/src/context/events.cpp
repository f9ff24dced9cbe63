#include "affect/context/events.hpp"

#include <array>

namespace affect::context {

namespace {
constexpr std::array<std::string_view, 5> kAppEventNames{"start", "close", "minimize", "maximize", "foreground"};
}

std::string_view to_string(AppEventKind kind) { return kAppEventNames[std::size_t(kind)]; }

std::optional<AppEventKind> parse_app_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kAppEventNames.size(); ++i)
    if (kAppEventNames[i] == name) return AppEventKind(i);
  return std::nullopt;
}

nlohmann::ordered_json to_json(const AppEvent& e) {
  nlohmann::ordered_json j;
  j["app_name"] = e.app_name;
  j["window_title_hash"] = e.window_title_hash;
  j["bounds"] = {{"x", e.bounds.x}, {"y", e.bounds.y}, {"w", e.bounds.w}, {"h", e.bounds.h}};
  j["event"] = to_string(e.event);
  return j;
}

nlohmann::ordered_json to_json(const CalendarEvent& e) {
  nlohmann::ordered_json j;
  j["attendee_count"] = e.attendee_count;
  j["start_time"] = to_micros(e.start_time);
  j["duration"] = to_micros(e.duration);
  j["is_remote"] = e.is_remote;
  return j;
}

}  // namespace affect::context
