#include "affect/app/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "affect/app/trace.hpp"
#include "affect/core/base64.hpp"

namespace affect::app {

namespace {

using nlohmann::json;

struct Line {
  std::int64_t t;
  int order;  // video, audio, context at equal times
  std::string text;
};

bool in_gap(const SynthOptions& o, double s) { return s >= o.gap_begin && s < o.gap_end; }

std::string video_line(const SynthOptions& o, std::int64_t t) {
  const double s = double(t) / 1e6;
  vision::VideoFrame frame(o.width, o.height);
  frame.fill(40, 40, 40);
  for (const auto& f : o.faces) {
    const double pulse = 3.0 * std::sin(2.0 * std::numbers::pi * f.hr_bpm / 60.0 * s) +
                         2.0 * std::sin(2.0 * std::numbers::pi * f.resp_bpm / 60.0 * s);
    const int g = std::clamp(int(std::lround(f.color[1] + pulse)), 0, 255);
    const int x = std::clamp(int(std::lround(f.x + f.drift * s)), 0, o.width - f.side - 1);
    frame.fill_rect({x, f.y, f.side, f.side}, f.color[0], std::uint8_t(g), f.color[2]);
  }
  std::copy(o.pixel_sentinel.begin(), o.pixel_sentinel.end(),
            frame.pixels.end() - std::ptrdiff_t(o.pixel_sentinel.size()));
  return trace_line(from_micros(t), frame);
}

std::string audio_line(const SynthOptions& o, std::int64_t t, std::int64_t first_sample, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.002);
  std::vector<std::uint8_t> pcm(std::size_t(o.audio_chunk) * 2);
  for (int i = 0; i < o.audio_chunk; ++i) {
    const double s = double(first_sample + i) / 16000.0;
    const bool speaking = std::fmod(s, 2.5) >= 0.9;
    double v = noise(rng);
    if (speaking) v += 0.3 * std::sin(2.0 * std::numbers::pi * 150.0 * s);
    const auto q = std::uint16_t(std::int16_t(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0)));
    pcm[std::size_t(2 * i)] = std::uint8_t(q & 0xff);
    pcm[std::size_t(2 * i + 1)] = std::uint8_t(q >> 8);
  }
  std::copy(o.audio_sentinel.begin(), o.audio_sentinel.end(), pcm.end() - std::ptrdiff_t(o.audio_sentinel.size()));
  json j;
  j["t"] = t;
  j["kind"] = "audio";
  j["sample_rate"] = 16000;
  j["pcm_b64"] = base64_encode(pcm);
  return j.dump();
}

std::vector<Line> context_lines(const SynthOptions& o, std::mt19937_64& rng) {
  std::vector<Line> out;
  auto add = [&](double s, json j) {
    if (s >= o.seconds || in_gap(o, s)) return;
    const auto t = std::int64_t(std::llround(s * 1e6));
    j["t"] = t;
    out.push_back({t, 2, j.dump()});
  };
  const char* apps[] = {"editor", "browser", "mail", "terminal"};
  const char* events[] = {"start", "foreground", "maximize", "minimize", "close"};
  int n = 0;
  for (double s = 0.5; s < o.seconds; s += 7.0, ++n)
    add(s, {{"kind", "app"},
            {"app_name", apps[n % 4]},
            {"event", events[n % 5]},
            {"bounds", {{"x", 10 * n}, {"y", 5}, {"w", 800}, {"h", 600}}},
            {"window_title", o.title_sentinel + " draft " + std::to_string(n)}});
  std::uniform_real_distribution<double> jitter(0.0, 0.9);
  for (int sec = 0; sec < int(o.seconds); ++sec) {
    if (sec % 3 != 2) add(sec + jitter(rng), {{"kind", "key"}});
    if (sec % 4 == 1) add(sec + jitter(rng), {{"kind", "mouse"}});
  }
  add(30.2, {{"kind", "calendar"}, {"attendee_count", 4}, {"duration", 10000000}, {"is_remote", true}});
  add(41.3, {{"kind", "email"}, {"sentiment_score", 0.8125}});
  add(47.9, {{"kind", "email"}, {"sentiment_score", 0.1875}});
  std::stable_sort(out.begin(), out.end(), [](const Line& a, const Line& b) { return a.t < b.t; });
  return out;
}

}  // namespace

void write_synthetic_trace(std::ostream& out, const SynthOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::vector<Line> lines;
  const auto frames = std::int64_t(std::floor(o.seconds * o.fps));
  for (std::int64_t i = 0; i < frames; ++i) {
    const auto t = std::int64_t(std::llround(double(i) * 1e6 / o.fps));
    if (!in_gap(o, double(t) / 1e6)) lines.push_back({t, 0, video_line(o, t)});
  }
  const auto chunks = std::int64_t(std::floor(o.seconds * 16000.0 / o.audio_chunk));
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t first = c * o.audio_chunk;
    const auto t = first * 1000000 / 16000;
    if (!in_gap(o, double(t) / 1e6)) lines.push_back({t, 1, audio_line(o, t, first, rng)});
  }
  auto ctx = context_lines(o, rng);
  lines.insert(lines.end(), std::make_move_iterator(ctx.begin()), std::make_move_iterator(ctx.end()));
  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) { return a.t != b.t ? a.t < b.t : a.order < b.order; });
  for (const auto& l : lines) out << l.text << '\n';
}

}  // namespace affect::app
