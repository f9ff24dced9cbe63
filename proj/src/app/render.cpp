#include "affect/app/render.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace affect::app {

namespace {

template <std::size_t N>
std::string dominant(const std::array<double, N>& p, const std::array<std::string_view, N>& names) {
  const auto best = std::size_t(std::max_element(p.begin(), p.end()) - p.begin());
  return fmt::format("{} {:.2f}", names[best], p[best]);
}

std::string yes_no(bool v) { return v ? "yes" : "no"; }

template <class T, class F>
std::string or_absent(const std::optional<T>& v, F&& show) {
  return v ? show(*v) : std::string(kAbsent);
}

}  // namespace

std::string render_metrics(const sinks::MetricsRow& row) {
  std::string out;
  auto line = [&](std::string_view label, const std::string& value) { out += fmt::format("{:<12}{}\n", label, value); };
  auto face_line = [&](std::string_view label, const std::string& value) {
    out += fmt::format("  {:<4}{}\n", label, value);
  };
  auto hr = [](double v) { return fmt::format("{:.1f} bpm", v); };
  auto rr = [](double v) { return fmt::format("{:.1f} /min", v); };

  out += fmt::format("== window {:.3f} s ==\n", double(to_micros(row.window_start)) / 1e6);
  line("faces", std::to_string(row.face_count));
  if (row.faces.empty()) {
    face_line("HR", std::string(kAbsent));
    face_line("RR", std::string(kAbsent));
    face_line("EXP", std::string(kAbsent));
  }
  for (const auto& f : row.faces) {
    line(fmt::format("face {}", f.id),
         fmt::format("box {:.1f} {:.1f} {:.1f} {:.1f}", f.bbox[0], f.bbox[1], f.bbox[2], f.bbox[3]));
    face_line("HR", or_absent(f.hr_bpm, hr));
    face_line("RR", or_absent(f.resp_bpm, rr));
    face_line("EXP", or_absent(f.expression, [](const auto& p) { return dominant(p, vision::kExpressionNames); }));
  }
  line("VAD", or_absent(row.vad_fraction, [](double v) { return fmt::format("{:.2f}", v); }));
  line("pitch", or_absent(row.pitch_mean, [](double v) { return fmt::format("{:.1f} Hz", v); }));
  line("energy", or_absent(row.energy_mean, [](double v) { return fmt::format("{:.4f}", v); }));
  line("transcript", row.transcript.empty() ? std::string(kAbsent) : "\"" + row.transcript + "\"");
  line("sentiment",
       or_absent(row.language_sentiment, [](const auto& p) { return dominant(p, text::kSentimentNames); }));
  line("valence", or_absent(row.valence, [](const auto& p) {
         return fmt::format("neg {:.2f} neu {:.2f} pos {:.2f}", p[0], p[1], p[2]);
       }));
  if (row.app_events.empty()) {
    line("apps", std::string(kAbsent));
  } else {
    const auto& last = row.app_events.back().event;
    line("apps", fmt::format("{} event(s), last {} {}", row.app_events.size(), last.app_name, context::to_string(last.event)));
  }
  line("calendar", row.calendar_active ? "in meeting" : "no");
  if (row.email_scores.empty()) {
    line("email", std::string(kAbsent));
  } else {
    std::string scores;
    for (double s : row.email_scores) scores += fmt::format("{}{:.2f}", scores.empty() ? "" : " ", s);
    line("email", scores);
  }
  line("keyboard", yes_no(row.keyboard_active));
  line("mouse", yes_no(row.mouse_active));
  return out;
}

}  // namespace affect::app
