#include "affect/context/replay.hpp"

#include <fstream>
#include <sodium.h>

#include "affect/core/error.hpp"
#include "affect/core/window.hpp"

namespace affect::context {

std::string hash_title(std::string_view title, std::string_view salt) {
  static const int rc = sodium_init();
  (void)rc;
  std::array<unsigned char, 16> digest{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, digest.size());
  const unsigned char zero = 0;
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(salt.data()), salt.size());
  crypto_generichash_update(&st, &zero, 1);
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(title.data()), title.size());
  crypto_generichash_final(&st, digest.data(), digest.size());
  std::string hex(digest.size() * 2 + 1, '\0');
  sodium_bin2hex(hex.data(), hex.size(), digest.data(), digest.size());
  hex.pop_back();
  return hex;
}

namespace {

using nlohmann::json;

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

AppEvent parse_app(const json& j, const EventLogOptions& options) {
  AppEvent e;
  e.app_name = field<std::string>(j, "app_name");
  const auto kind = parse_app_event_kind(field<std::string>(j, "event"));
  if (!kind) throw std::invalid_argument("unknown app event '" + field<std::string>(j, "event") + "'");
  e.event = *kind;
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (!b.is_object()) throw std::invalid_argument("field 'bounds' must be an object");
    e.bounds = {field<int>(b, "x"), field<int>(b, "y"), field<int>(b, "w"), field<int>(b, "h")};
  }
  if (j.contains("window_title")) e.window_title_hash = hash_title(field<std::string>(j, "window_title"), options.title_salt);
  return e;
}

CalendarEvent parse_calendar(const json& j, Timestamp t) {
  CalendarEvent e;
  e.attendee_count = field<int>(j, "attendee_count");
  if (e.attendee_count < 1) throw std::invalid_argument("attendee_count must be at least 1");
  e.duration = Duration(field<std::int64_t>(j, "duration"));
  if (e.duration <= Duration::zero()) throw std::invalid_argument("duration must be positive");
  e.start_time = from_micros(field_or<std::int64_t>(j, "start_time", to_micros(t)));
  e.is_remote = field_or<bool>(j, "is_remote", false);
  return e;
}

EmailSendEvent parse_email(const json& j, Timestamp t, const EventLogOptions& options) {
  EmailSendEvent e;
  e.send_time = t;
  if (j.contains("sentiment_score")) {
    e.sentiment_score = field<double>(j, "sentiment_score");
    if (!(e.sentiment_score >= 0.0 && e.sentiment_score <= 1.0))
      throw std::invalid_argument("sentiment_score must lie in [0,1]");
  } else if (j.contains("body")) {
    if (!options.email_model) throw std::invalid_argument("email body given but no sentiment model configured");
    e.sentiment_score = options.email_model->score(field<std::string>(j, "body"));
  } else {
    throw std::invalid_argument("email needs sentiment_score or body");
  }
  return e;
}

}  // namespace

ContextEvent parse_event(const json& j, const EventLogOptions& options) {
  ContextEvent ev;
  try {
    if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
    ev.time = from_micros(field<std::int64_t>(j, "t"));
    const auto kind = field<std::string>(j, "kind");
    if (kind == "app") ev.payload = parse_app(j, options);
    else if (kind == "calendar") ev.payload = parse_calendar(j, ev.time);
    else if (kind == "email") ev.payload = parse_email(j, ev.time, options);
    else if (kind == "key") ev.payload = RawInputEvent{InputDevice::keyboard};
    else if (kind == "mouse") ev.payload = RawInputEvent{InputDevice::mouse};
    else throw std::invalid_argument("unknown kind '" + kind + "'");
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return ev;
}

std::vector<ContextEvent> parse_event_log(std::istream& in, const EventLogOptions& options) {
  std::vector<ContextEvent> out;
  std::string line;
  std::size_t number = 0;
  std::optional<Timestamp> last;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(number) + ": ";
    ContextEvent ev;
    try {
      ev = parse_event(json::parse(line), options);
    } catch (const json::exception& e) {
      throw ParseError(where + e.what());
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    if (last && ev.time < *last)
      throw NonMonotonicTimestamp(where + "t=" + std::to_string(to_micros(ev.time)) + " precedes " +
                                  std::to_string(to_micros(*last)));
    last = ev.time;
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<ContextEvent> load_event_log(const std::filesystem::path& path, const EventLogOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read event log " + path.string());
  return parse_event_log(in, options);
}

ContextStreams add_context_replay(Pipeline& pipeline, std::vector<ContextEvent> events, ReplayOptions options) {
  auto src = pipeline.add_source("context_replay");
  auto apps = src.output<AppEvent>("context.app", PayloadKind::app_event);
  auto calendar = src.output<CalendarEvent>("context.calendar", PayloadKind::calendar_event);
  auto email = src.output<EmailSendEvent>("context.email", PayloadKind::email_score);
  auto raw = src.output<RawInputEvent>("context.raw_input", PayloadKind::input_activity);
  auto log = std::make_shared<const std::vector<ContextEvent>>(std::move(events));
  const double speed = options.speed;
  src.body([=](const SourceContext& ctx) {
    const auto wall_start = std::chrono::steady_clock::now();
    for (const auto& ev : *log) {
      if (ctx.stop_requested()) return;
      if (speed > 0.0) {
        const auto offset = std::chrono::duration<double, std::micro>(double(to_micros(ev.time - log->front().time)) / speed);
        if (!ctx.sleep_until(wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset))) return;
      }
      std::visit(
          [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, AppEvent>) apps.emit(p, ev.time);
            else if constexpr (std::is_same_v<P, CalendarEvent>) calendar.emit(p, ev.time);
            else if constexpr (std::is_same_v<P, EmailSendEvent>) email.emit(p, ev.time);
            else raw.emit(p, ev.time);
          },
          ev.payload);
      // every stream learns that nothing earlier is coming
      apps.advance(ev.time);
      calendar.advance(ev.time);
      email.advance(ev.time);
      raw.advance(ev.time);
    }
  });
  return {apps.stream(), calendar.stream(), email.stream(), raw.stream()};
}

Stream<InputActivity> add_input_summary(Pipeline& pipeline, const Stream<RawInputEvent>& raw, Duration window,
                                        SubscriptionOptions delivery) {
  if (window <= Duration::zero()) throw std::invalid_argument("input window must be positive");
  struct State {
    std::optional<Timestamp> open;  // start of the window being filled
    Timestamp last{};               // latest raw event
    InputActivity current;
  };
  auto c = pipeline.add_component("input_summary");
  auto out = c.output<InputActivity>("context.input", PayloadKind::input_activity);
  auto st = std::make_shared<State>();
  const std::int64_t len = window.count();
  auto flush_before = [st, out, window](Timestamp limit) {
    // emit every window ending at or before `limit`
    while (st->open && *st->open + window <= limit) {
      st->current.window_time = *st->open;
      out.emit(st->current, *st->open);
      st->current = {};
      *st->open += window;
    }
  };
  const std::size_t idx = c.input(raw, [st, flush_before, len](const Message<RawInputEvent>& m) {
    const Timestamp t = m.originating_time();
    if (!st->open) st->open = from_micros(floor_div(to_micros(t), len) * len);
    flush_before(t);
    st->last = t;
    (m->device == InputDevice::keyboard ? st->current.keyboard_active : st->current.mouse_active) = true;
  }, delivery);
  c.on_progress([c, idx, flush_before]() {
    if (!c.input_closed(idx)) flush_before(c.input_watermark(idx));
  });
  c.on_close([st, flush_before, window] {
    if (st->open) flush_before(st->last + window);
    st->open.reset();
  });
  // before the first event, hold at the grid window holding the watermark
  c.hold([st, c, idx, len]() -> std::optional<Timestamp> {
    if (st->open) return st->open;
    const Timestamp wm = c.input_watermark(idx);
    if (wm == kTimeMin || c.input_closed(idx)) return std::nullopt;
    return from_micros(floor_div(to_micros(wm), len) * len);
  });
  return out.stream();
}

}  // namespace affect::context
