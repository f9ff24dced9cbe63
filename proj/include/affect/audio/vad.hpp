#pragma once

#include <optional>
#include <span>
#include <vector>

#include "affect/audio/types.hpp"

namespace affect::audio {

struct VadParams {
  double margin_db = 6.0;
  /// ceil(250 ms / 20 ms)
  int hangover_frames = 13;
  /// Weight of the newest inactive frame in the noise-floor average.
  double floor_alpha = 0.05;
};

/// 10 log10(mean square + 1e-10) of one frame.
double frame_energy_db(std::span<const float> frame);

/// Adaptive energy detector. The noise floor starts at the first frame's
/// energy and tracks frames whose raw decision is inactive.
class VoiceActivityDetector {
public:
  explicit VoiceActivityDetector(VadParams params = {}) : params_(params) {}

  /// Throws BadFrameLength unless the frame holds 320 samples.
  VadFlag update(std::span<const float> frame, Timestamp frame_time);

  std::optional<double> noise_floor_db() const { return floor_; }
  void reset() {
    floor_.reset();
    hangover_ = 0;
  }

private:
  VadParams params_;
  std::optional<double> floor_;
  int hangover_ = 0;
};

struct SegmenterParams {
  Duration min_segment = std::chrono::milliseconds(200);
  Duration max_segment = std::chrono::seconds(30);
};

/// Turns contiguous active VAD frames into speech segments. Runs shorter
/// than min_segment are dropped; runs reaching max_segment are cut.
class SpeechSegmenter {
public:
  explicit SpeechSegmenter(SegmenterParams params = {}) : params_(params) {}

  /// Feeds one 20 ms frame with its decision; returns completed segments.
  std::vector<SpeechSegment> push(std::span<const float> frame, const VadFlag& flag);
  /// Closes the open run, if any.
  std::vector<SpeechSegment> finish();

  /// Start of the run being collected.
  std::optional<Timestamp> open_start() const {
    return frames_ ? std::optional<Timestamp>(start_) : std::nullopt;
  }
  Duration active_duration() const { return active_; }
  Duration emitted_duration() const { return emitted_; }
  Duration dropped_duration() const { return dropped_; }

private:
  std::vector<SpeechSegment> close_run();

  SegmenterParams params_;
  std::vector<float> samples_;
  Timestamp start_{};
  int frames_ = 0;
  Duration active_{0};
  Duration emitted_{0};
  Duration dropped_{0};
};

}  // namespace affect::audio
