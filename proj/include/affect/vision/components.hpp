#pragma once

#include <chrono>
#include <memory>

#include "affect/core/pipeline.hpp"
#include "affect/vision/identity.hpp"
#include "affect/vision/providers.hpp"
#include "affect/vision/tracker.hpp"

namespace affect::vision {

struct VisionProviders {
  std::shared_ptr<const FaceDetector> detector;
  std::shared_ptr<const ExpressionClassifier> expression;  // optional
  std::shared_ptr<const EmbeddingProvider> embedding;      // optional, needs a gallery
  std::shared_ptr<const PoseEstimator> pose;               // optional
};

struct VisionOptions {
  TrackerParams tracker;
  std::chrono::milliseconds deadline{200};
  /// Classify expressions on every n-th frame only.
  int expression_every_n_frames = 1;
  Gallery gallery;
  double identity_threshold = 0.5;
  /// Tolerance for pairing tracks with their source frame.
  Duration frame_join_tolerance{0};
};

struct VisionStreams {
  Stream<FaceTracks> tracks;           // "face.tracks"
  Stream<FaceExpressions> expressions; // "face.expression" (invalid when disabled)
  Stream<PoseSet> poses;               // "face.pose" (invalid when disabled)
  Stream<Joined<FaceTracks, VideoFrame>> tracked_frames;
};

/// Wires detection + tracking (+ recognition), expression and pose
/// components onto `frames`.
VisionStreams add_vision(Pipeline& pipeline, const Stream<VideoFrame>& frames, const VisionProviders& providers,
                         const VisionOptions& options, SubscriptionOptions delivery = {});

}  // namespace affect::vision
