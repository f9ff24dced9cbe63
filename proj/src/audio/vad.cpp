#include "affect/audio/vad.hpp"

#include <cmath>

namespace affect::audio {

namespace {

constexpr Duration kFrameDuration = std::chrono::milliseconds(20);

}  // namespace

double frame_energy_db(std::span<const float> frame) {
  double sum = 0.0;
  for (float v : frame) sum += double(v) * double(v);
  const double mean = frame.empty() ? 0.0 : sum / double(frame.size());
  return 10.0 * std::log10(mean + 1e-10);
}

VadFlag VoiceActivityDetector::update(std::span<const float> frame, Timestamp frame_time) {
  if (frame.size() != std::size_t(kVadFrame))
    throw BadFrameLength("vad frame must hold " + std::to_string(kVadFrame) + " samples");
  const double e = frame_energy_db(frame);
  if (!floor_) floor_ = e;
  const bool raw = e > *floor_ + params_.margin_db;
  bool active = raw;
  if (raw) {
    hangover_ = params_.hangover_frames;
  } else {
    *floor_ = (1.0 - params_.floor_alpha) * *floor_ + params_.floor_alpha * e;
    if (hangover_ > 0) {
      --hangover_;
      active = true;
    }
  }
  return {active, frame_time};
}

std::vector<SpeechSegment> SpeechSegmenter::push(std::span<const float> frame, const VadFlag& flag) {
  if (!flag.active) return close_run();
  active_ += kFrameDuration;
  if (frames_ == 0) start_ = flag.frame_time;
  samples_.insert(samples_.end(), frame.begin(), frame.end());
  ++frames_;
  if (frames_ * kFrameDuration >= params_.max_segment) return close_run();
  return {};
}

std::vector<SpeechSegment> SpeechSegmenter::finish() { return close_run(); }

std::vector<SpeechSegment> SpeechSegmenter::close_run() {
  std::vector<SpeechSegment> out;
  if (frames_ == 0) return out;
  const Duration length = frames_ * kFrameDuration;
  if (length < params_.min_segment) {
    dropped_ += length;
  } else {
    SpeechSegment s;
    s.samples = Eigen::Map<const Eigen::VectorXf>(samples_.data(), Eigen::Index(samples_.size()));
    s.start_time = start_;
    s.end_time = start_ + length;
    emitted_ += length;
    out.push_back(std::move(s));
  }
  samples_.clear();
  frames_ = 0;
  return out;
}

}  // namespace affect::audio
