#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "affect/core/time.hpp"

namespace affect::app {

/// A face in the synthetic scene: a uniform marker rectangle whose green
/// channel carries a cardiac and a respiratory oscillation.
struct SynthFace {
  int x = 4, y = 10, side = 24;
  std::array<std::uint8_t, 3> color{180, 120, 100};
  double hr_bpm = 72.0;
  double resp_bpm = 15.0;
  /// Horizontal drift in pixels per second (kept below the tracker radius).
  double drift = 0.3;
};

struct SynthOptions {
  double seconds = 60.0;
  double fps = 15.0;
  int width = 96, height = 72;
  std::vector<SynthFace> faces{SynthFace{}, SynthFace{64, 30, 24, {90, 150, 200}, 96.0, 12.0, -0.2}};
  /// Audio buffer length. Speech bursts are 150 Hz tones: 0.9 s of quiet,
  /// then 1.6 s of tone, repeating.
  int audio_chunk = 1600;
  /// No record at all inside [gap_begin, gap_end) seconds (empty windows).
  double gap_begin = 20.0, gap_end = 25.0;
  std::uint64_t seed = 1;
  /// Planted in the bottom pixel row of every frame.
  std::array<std::uint8_t, 16> pixel_sentinel{0xC0, 0xFF, 0xEE, 0x5E, 0x17, 0x1E, 0x15, 0xAF,
                                              0xEC, 0x75, 0xE9, 0x7A, 0x11, 0x0D, 0xBA, 0xD5};
  /// Planted as 8 PCM samples in every audio buffer; the high bytes keep
  /// the samples below 1% of full scale.
  std::array<std::uint8_t, 16> audio_sentinel{0x5A, 0x00, 0xA5, 0xFF, 0x3C, 0x00, 0xC3, 0xFF,
                                              0x69, 0x00, 0x96, 0xFF, 0x2D, 0x00, 0xD2, 0xFF};
  /// Embedded in every window title of the context events.
  std::string title_sentinel = "Payroll-7Q3Z-confidential";
};

/// Writes a time-ordered trace (video, audio and context lines) to `out`.
/// Identical options give identical bytes.
void write_synthetic_trace(std::ostream& out, const SynthOptions& options = {});

}  // namespace affect::app
