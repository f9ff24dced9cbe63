#pragma once

#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <vector>

#include "affect/context/events.hpp"
#include "affect/core/pipeline.hpp"
#include "affect/text/model.hpp"

namespace affect::context {

/// Hex of a 16-byte BLAKE2b digest of salt || 0x00 || title.
std::string hash_title(std::string_view title, std::string_view salt);

struct EventLogOptions {
  std::string title_salt;
  /// Scores email "body" fields; without it such lines are a ParseError.
  std::shared_ptr<const text::SentimentModel> email_model;
};

/// Parses the NDJSON event log, one object per line:
///   {"t": <microseconds>, "kind": "app|calendar|email|key|mouse", ...}
/// app:      app_name, event (start|close|minimize|maximize|foreground),
///           bounds {x,y,w,h}, window_title (hashed, then discarded)
/// calendar: attendee_count >= 1, duration (us) > 0, start_time (us, default t),
///           is_remote (default false)
/// email:    sentiment_score in [0,1], or body (scored, then discarded)
/// key/mouse: no further fields are read
/// Blank lines are skipped. Throws ParseError naming the line, or
/// NonMonotonicTimestamp when t decreases.
std::vector<ContextEvent> parse_event_log(std::istream& in, const EventLogOptions& options = {});
/// One already-decoded log line; ParseError without a line prefix.
ContextEvent parse_event(const nlohmann::json& line, const EventLogOptions& options = {});
std::vector<ContextEvent> load_event_log(const std::filesystem::path& path, const EventLogOptions& options = {});

struct ContextStreams {
  Stream<AppEvent> apps;            // "context.app"
  Stream<CalendarEvent> calendar;   // "context.calendar"
  Stream<EmailSendEvent> email;     // "context.email"
  Stream<RawInputEvent> raw_input;  // "context.raw_input"
};

struct ReplayOptions {
  /// Wall-clock pacing multiplier; <= 0 replays as fast as possible.
  /// Originating times are always the recorded ones.
  double speed = 0.0;
};

/// Source "context_replay" emitting each event at its recorded time.
ContextStreams add_context_replay(Pipeline& pipeline, std::vector<ContextEvent> events, ReplayOptions options = {});

/// One InputActivity per window on the grid k * window, from the window of
/// the first raw event up to the input watermark, empty windows included.
/// Each is stamped at its window start on "context.input".
Stream<InputActivity> add_input_summary(Pipeline& pipeline, const Stream<RawInputEvent>& raw,
                                        Duration window = std::chrono::seconds(1), SubscriptionOptions delivery = {});

}  // namespace affect::context
