#include "affect/sinks/metrics.hpp"

#include <algorithm>
#include <map>

#include "affect/core/window.hpp"

namespace affect::sinks {

namespace {

template <std::size_t N, class Names>
std::array<double, N> read_named(const Json& j, const Names& names) {
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j.at(std::string(names[i])).template get<double>();
  return out;
}

constexpr std::array<std::string_view, 3> kValenceNames{"negative", "neutral", "positive"};

const std::vector<std::string> kRowKeys{"window_start", "face_count",    "faces",         "vad_fraction",
                                        "transcript",   "language_sentiment", "pitch_mean", "energy_mean",
                                        "valence",      "app_events",    "calendar_active", "email_scores",
                                        "keyboard_active", "mouse_active"};

}  // namespace

Json to_json(const MetricsRow& row) {
  Json j;
  j["window_start"] = to_micros(row.window_start);
  j["face_count"] = row.face_count;
  Json faces = Json::array();
  for (const auto& f : row.faces) {
    Json face;
    face["id"] = f.id;
    face["bbox"] = {{"x", f.bbox[0]}, {"y", f.bbox[1]}, {"w", f.bbox[2]}, {"h", f.bbox[3]}};
    if (f.expression) face["expression"] = expression_json(*f.expression);
    if (f.hr_bpm) face["hr_bpm"] = *f.hr_bpm;
    if (f.resp_bpm) face["resp_bpm"] = *f.resp_bpm;
    faces.push_back(std::move(face));
  }
  j["faces"] = std::move(faces);
  if (row.vad_fraction) j["vad_fraction"] = *row.vad_fraction;
  j["transcript"] = row.transcript;
  if (row.language_sentiment) j["language_sentiment"] = sentiment_json(*row.language_sentiment);
  if (row.pitch_mean) j["pitch_mean"] = *row.pitch_mean;
  if (row.energy_mean) j["energy_mean"] = *row.energy_mean;
  if (row.valence) j["valence"] = valence_json(*row.valence);
  Json apps = Json::array();
  for (const auto& a : row.app_events) {
    Json e;
    e["t"] = to_micros(a.time);
    const Json fields = context::to_json(a.event);
    for (const auto& [k, v] : fields.items()) e[k] = v;
    apps.push_back(std::move(e));
  }
  j["app_events"] = std::move(apps);
  j["calendar_active"] = row.calendar_active;
  j["email_scores"] = row.email_scores;
  j["keyboard_active"] = row.keyboard_active;
  j["mouse_active"] = row.mouse_active;
  for (const auto& [k, v] : row.extensions.items()) j[k] = v;
  return j;
}

MetricsRow row_from_json(const Json& doc) {
  try {
    MetricsRow row;
    row.window_start = from_micros(doc.at("window_start").get<std::int64_t>());
    row.face_count = doc.at("face_count").get<int>();
    for (const auto& f : doc.at("faces")) {
      FaceRow face;
      face.id = f.at("id").get<std::uint64_t>();
      const auto& b = f.at("bbox");
      face.bbox = {b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(), b.at("h").get<double>()};
      if (f.contains("expression"))
        face.expression = read_named<vision::kExpressionCount>(f.at("expression"), vision::kExpressionNames);
      if (f.contains("hr_bpm")) face.hr_bpm = f.at("hr_bpm").get<double>();
      if (f.contains("resp_bpm")) face.resp_bpm = f.at("resp_bpm").get<double>();
      row.faces.push_back(std::move(face));
    }
    if (doc.contains("vad_fraction")) row.vad_fraction = doc.at("vad_fraction").get<double>();
    row.transcript = doc.at("transcript").get<std::string>();
    if (doc.contains("language_sentiment"))
      row.language_sentiment =
          read_named<text::kSentimentCategories>(doc.at("language_sentiment"), text::kSentimentNames);
    if (doc.contains("pitch_mean")) row.pitch_mean = doc.at("pitch_mean").get<double>();
    if (doc.contains("energy_mean")) row.energy_mean = doc.at("energy_mean").get<double>();
    if (doc.contains("valence")) row.valence = read_named<3>(doc.at("valence"), kValenceNames);
    for (const auto& a : doc.at("app_events")) {
      AppEventRow e;
      e.time = from_micros(a.at("t").get<std::int64_t>());
      e.event.app_name = a.at("app_name").get<std::string>();
      e.event.window_title_hash = a.at("window_title_hash").get<std::string>();
      const auto& b = a.at("bounds");
      e.event.bounds = {b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
      const auto kind = context::parse_app_event_kind(a.at("event").get<std::string>());
      if (!kind) throw ParseError("unknown app event in row");
      e.event.event = *kind;
      row.app_events.push_back(std::move(e));
    }
    row.calendar_active = doc.at("calendar_active").get<bool>();
    row.email_scores = doc.at("email_scores").get<std::vector<double>>();
    row.keyboard_active = doc.at("keyboard_active").get<bool>();
    row.mouse_active = doc.at("mouse_active").get<bool>();
    for (const auto& [k, v] : doc.items())
      if (std::find(kRowKeys.begin(), kRowKeys.end(), k) == kRowKeys.end()) row.extensions[k] = v;
    return row;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed metrics row: ") + e.what());
  }
}

// --- sanitize ---------------------------------------------------------------

const std::vector<std::string>& forbidden_keys() {
  static const std::vector<std::string> keys{"pixels",        "samples",      "email_body",
                                             "email_subject", "window_title", "attendee_names"};
  return keys;
}

namespace {

bool valid_text(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return false;
      ++i;
      continue;
    }
    const int extra = (c & 0xE0) == 0xC0 ? 1 : (c & 0xF0) == 0xE0 ? 2 : (c & 0xF8) == 0xF0 ? 3 : -1;
    if (extra < 0 || i + std::size_t(extra) >= s.size()) return false;
    for (int k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + std::size_t(k)]) & 0xC0) != 0x80) return false;
    i += std::size_t(extra) + 1;
  }
  return true;
}

bool byte_array(const Json& v) {
  if (!v.is_array() || v.size() <= 64) return false;
  return std::all_of(v.begin(), v.end(), [](const Json& e) {
    return e.is_number_integer() && e.get<std::int64_t>() >= 0 && e.get<std::int64_t>() <= 255;
  });
}

void scrub(Json& node, SanitizeMode mode, const std::string& path) {
  if (node.is_binary()) throw SanitizeViolation("binary blob at " + path);
  if (node.is_string() && !valid_text(node.get_ref<const std::string&>()))
    throw SanitizeViolation("binary data in string at " + path);
  if (byte_array(node)) throw SanitizeViolation("byte array at " + path);
  if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) scrub(node[i], mode, path + "[" + std::to_string(i) + "]");
  } else if (node.is_object()) {
    const auto& forbidden = forbidden_keys();
    std::vector<std::string> strip;
    for (auto& [k, v] : node.items()) {
      if (std::find(forbidden.begin(), forbidden.end(), k) != forbidden.end()) {
        if (mode == SanitizeMode::strict) throw SanitizeViolation("forbidden field '" + k + "' at " + path);
        strip.push_back(k);
        continue;
      }
      scrub(v, mode, path + "." + k);
    }
    for (const auto& k : strip) node.erase(k);
  }
}

}  // namespace

Json sanitize(Json doc, SanitizeMode mode) {
  scrub(doc, mode, "$");
  return doc;
}

// --- aggregation ------------------------------------------------------------

namespace {

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const { return n ? std::optional<double>(sum / double(n)) : std::nullopt; }
};

template <std::size_t N>
struct MeanArray {
  std::array<double, N> sum{};
  std::size_t n = 0;
  void add(const std::array<double, N>& v) {
    for (std::size_t i = 0; i < N; ++i) sum[i] += v[i];
    ++n;
  }
  std::optional<std::array<double, N>> value() const {
    if (!n) return std::nullopt;
    auto out = sum;
    for (double& x : out) x /= double(n);
    return out;
  }
};

struct FaceAccum {
  MeanArray<4> bbox;
  MeanArray<vision::kExpressionCount> expression;
  Mean hr, resp;
};

}  // namespace

MetricsRow aggregate_row(const WindowInputs& in, Timestamp window_start, Duration window_length) {
  MetricsRow row;
  row.window_start = window_start;
  const Timestamp window_end = window_start + window_length;

  std::map<std::uint64_t, FaceAccum> faces;
  for (const auto& m : in.tracks)
    for (const auto& f : m->faces) {
      const auto& b = f.detection.bbox;
      faces[f.id].bbox.add({double(b.x), double(b.y), double(b.w), double(b.h)});
    }
  auto face = [&](std::uint64_t id) -> FaceAccum* {
    auto it = faces.find(id);
    return it == faces.end() ? nullptr : &it->second;
  };
  for (const auto& m : in.expressions)
    for (const auto& f : m->faces)
      if (auto* a = face(f.face_id)) a->expression.add(f.scores.probabilities);
  for (const auto& m : in.hr)
    if (auto* a = face(m->face_id)) a->hr.add(m->bpm);
  for (const auto& m : in.resp)
    if (auto* a = face(m->face_id)) a->resp.add(m->breaths_per_minute);
  row.face_count = int(faces.size());
  for (const auto& [id, a] : faces)
    row.faces.push_back({id, *a.bbox.value(), a.expression.value(), a.hr.value(), a.resp.value()});
  std::stable_sort(row.faces.begin(), row.faces.end(),
                   [](const FaceRow& x, const FaceRow& y) { return x.area() > y.area(); });

  Mean vad;
  for (const auto& m : in.vad) vad.add(m->active ? 1.0 : 0.0);
  row.vad_fraction = vad.value();

  Mean pitch, energy;
  for (const auto& m : in.prosody) {
    if (m->pitch_hz) pitch.add(*m->pitch_hz);
    energy.add(m->energy_rms);
  }
  row.pitch_mean = pitch.value();
  row.energy_mean = energy.value();

  auto texts = in.transcripts;
  std::stable_sort(texts.begin(), texts.end(),
                   [](const auto& a, const auto& b) { return a.originating_time() < b.originating_time(); });
  for (const auto& m : texts) {
    if (m->text.empty()) continue;
    if (!row.transcript.empty()) row.transcript += ' ';
    row.transcript += m->text;
  }

  MeanArray<3> valence;
  for (const auto& m : in.valence) valence.add(m->probabilities);
  row.valence = valence.value();
  MeanArray<text::kSentimentCategories> sentiment;
  for (const auto& m : in.sentiment) sentiment.add(m->probabilities);
  row.language_sentiment = sentiment.value();

  for (const auto& m : in.apps) row.app_events.push_back({m.originating_time(), m.payload()});
  for (const auto& m : in.email) row.email_scores.push_back(m->sentiment_score);
  for (const auto& m : in.input) {
    row.keyboard_active = row.keyboard_active || m->keyboard_active;
    row.mouse_active = row.mouse_active || m->mouse_active;
  }
  row.calendar_active = std::any_of(in.calendar.begin(), in.calendar.end(),
                                    [&](const context::CalendarEvent& c) { return c.overlaps(window_start, window_end); });
  return row;
}

// --- aggregator component ---------------------------------------------------

namespace {

struct AggregatorState {
  std::map<Timestamp, WindowInputs> windows;
  std::vector<context::CalendarEvent> calendar;
  std::optional<Timestamp> next;  // first window not yet emitted
  std::optional<Timestamp> last_seen;
  std::vector<std::size_t> inputs;
};

}  // namespace

Stream<MetricsRow> add_aggregator(Pipeline& pipeline, const AggregatorInputs& inputs, const AggregatorOptions& options,
                                  SubscriptionOptions delivery) {
  if (options.window <= Duration::zero()) throw std::invalid_argument("aggregation window must be positive");
  auto c = pipeline.add_component("aggregator");
  auto out = c.output<MetricsRow>("metrics.row", PayloadKind::metrics_row);
  auto st = std::make_shared<AggregatorState>();
  const Duration len = options.window;
  const Timestamp origin = options.origin.value_or(Timestamp{});
  if (options.origin) st->next = origin;
  auto window_of = [origin, len](Timestamp t) {
    return origin + len * floor_div(to_micros(t - origin), len.count());
  };

  auto add = [&]<class T>(const Stream<T>& stream, std::vector<Message<T>> WindowInputs::*member) {
    if (!stream.valid()) return;
    st->inputs.push_back(c.input(stream, [st, member, window_of](const Message<T>& m) {
      const Timestamp t = m.originating_time();
      if (st->next && t < *st->next) return;  // before the origin
      (st->windows[window_of(t)].*member).push_back(m);
      st->last_seen = st->last_seen ? std::max(*st->last_seen, t) : t;
    }, delivery));
  };
  add(inputs.tracks, &WindowInputs::tracks);
  add(inputs.expressions, &WindowInputs::expressions);
  add(inputs.hr, &WindowInputs::hr);
  add(inputs.resp, &WindowInputs::resp);
  add(inputs.vad, &WindowInputs::vad);
  add(inputs.prosody, &WindowInputs::prosody);
  add(inputs.transcripts, &WindowInputs::transcripts);
  add(inputs.valence, &WindowInputs::valence);
  add(inputs.sentiment, &WindowInputs::sentiment);
  add(inputs.apps, &WindowInputs::apps);
  add(inputs.email, &WindowInputs::email);
  add(inputs.input, &WindowInputs::input);
  if (inputs.calendar.valid())
    st->inputs.push_back(c.input(inputs.calendar, [st](const Message<context::CalendarEvent>& m) {
      st->calendar.push_back(m.payload());
      st->last_seen = st->last_seen ? std::max(*st->last_seen, m.originating_time()) : m.originating_time();
    }, delivery));

  auto emit_window = [st, out, len](Timestamp start) {
    WindowInputs in;
    if (auto it = st->windows.find(start); it != st->windows.end()) {
      in = std::move(it->second);
      st->windows.erase(it);
    }
    in.calendar = st->calendar;
    out.emit(aggregate_row(in, start, len), start);
    // calendar entries that ended before the next window are no longer needed
    const Timestamp next = start + len;
    std::erase_if(st->calendar, [next](const context::CalendarEvent& e) { return e.start_time + e.duration <= next; });
  };
  auto first_pending = [st]() -> std::optional<Timestamp> {
    if (st->next) return st->next;
    if (!st->windows.empty()) return st->windows.begin()->first;
    return std::nullopt;
  };
  auto min_watermark = [c, st]() {
    Timestamp wm = kTimeMax;
    for (auto idx : st->inputs) wm = std::min(wm, c.input_closed(idx) ? kTimeMax : c.input_watermark(idx));
    return wm;
  };

  c.on_progress([=]() {
    const Timestamp wm = min_watermark();
    if (wm == kTimeMax) return;  // flushed in on_close
    while (auto start = first_pending()) {
      if (*start + len > wm) break;
      emit_window(*start);
      st->next = *start + len;
    }
  });
  c.on_close([=]() {
    if (!st->last_seen) return;
    const Timestamp last = window_of(*st->last_seen);
    while (auto start = first_pending()) {
      if (*start > last) break;
      emit_window(*start);
      st->next = *start + len;
    }
  });
  // no row may be emitted before the earliest window a future input can reach
  c.hold([=]() -> std::optional<Timestamp> {
    if (st->next) return st->next;
    std::optional<Timestamp> h;
    if (!st->windows.empty()) h = st->windows.begin()->first;
    const Timestamp wm = min_watermark();
    if (wm != kTimeMax && wm != kTimeMin) h = h ? std::min(*h, window_of(wm)) : window_of(wm);
    return h;
  });
  return out.stream();
}

}  // namespace affect::sinks
