#pragma once

#include <array>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "affect/core/error.hpp"
#include "affect/core/time.hpp"

namespace affect::audio {

AFFECT_DEFINE_ERROR(BadFrameLength, "bad_frame_length");

inline constexpr int kSampleRate = 16000;
inline constexpr int kVadFrame = 320;      // 20 ms
inline constexpr int kProsodyFrame = 640;  // 40 ms, hop kVadFrame

/// Mono PCM in [-1, 1]; the originating time of the first sample is the
/// message time.
struct AudioBuffer {
  Eigen::VectorXf samples;
  int sample_rate = kSampleRate;
};

struct VadFlag {
  bool active = false;
  Timestamp frame_time{};
};

struct SpeechSegment {
  Eigen::VectorXf samples;
  int sample_rate = kSampleRate;
  Timestamp start_time{};
  Timestamp end_time{};

  Duration duration() const { return end_time - start_time; }
};

struct ProsodyFeatures {
  std::optional<double> pitch_hz;  // empty when unvoiced
  double energy_rms = 0.0;
  Timestamp frame_time{};
};

struct Transcript {
  std::string text;
  Timestamp start_time{};
  Timestamp end_time{};
};

/// [negative, neutral, positive]
struct ValenceScores {
  std::array<double, 3> probabilities{1.0 / 3, 1.0 / 3, 1.0 / 3};
  Timestamp start_time{};
  Timestamp end_time{};
};

}  // namespace affect::audio
