#include "affect/vision/components.hpp"

#include "affect/core/deadline.hpp"

namespace affect::vision {

VisionStreams add_vision(Pipeline& pipeline, const Stream<VideoFrame>& frames, const VisionProviders& providers,
                         const VisionOptions& options, SubscriptionOptions delivery) {
  if (!providers.detector) throw ProviderUnavailable("no face detector configured");
  VisionStreams out;

  {
    auto c = pipeline.add_component("face_detector");
    auto tracks = c.output<FaceTracks>("face.tracks", PayloadKind::face_tracks);
    auto tracker = std::make_shared<FaceTracker>(options.tracker);
    const auto detector = providers.detector;
    const auto embedder = options.gallery.empty() ? nullptr : providers.embedding;
    const auto gallery = std::make_shared<const Gallery>(options.gallery);
    const auto deadline = options.deadline;
    const double threshold = options.identity_threshold;
    c.input(frames, [=](const Message<VideoFrame>& m) {
      auto frame = m.shared();
      // a late or failing provider yields nothing for this frame
      auto detections = flatten(call_with_deadline(guarded([detector, frame] { return detector->detect(*frame); }), deadline));
      if (!detections) return;
      std::erase_if(*detections, [&](const FaceDetection& d) {
        return !d.bbox.inside(frame->width, frame->height) || d.bbox.w == 0 || d.bbox.h == 0;
      });
      FaceTracks result{tracker->update(*detections)};
      if (embedder) {
        std::vector<std::function<std::optional<FaceEmbedding>()>> calls;
        for (const auto& f : result.faces) {
          const BoundingBox box = f.detection.bbox;
          calls.emplace_back(guarded([embedder, frame, box] { return embedder->embed(crop(*frame, box)); }));
        }
        auto embeddings = call_all_with_deadline(std::move(calls), deadline);
        for (std::size_t i = 0; i < result.faces.size(); ++i) {
          if (!embeddings[i] || !*embeddings[i]) continue;
          if (auto id = match_identity(**embeddings[i], *gallery, threshold)) {
            result.faces[i].id = *id;
            result.faces[i].recognized = true;
          }
        }
      }
      tracks.emit(std::move(result), m.originating_time());
    }, delivery);
    out.tracks = tracks.stream();
  }

  out.tracked_frames =
      pipeline.join(out.tracks, frames, options.frame_join_tolerance, "face.tracks+video", delivery);

  if (providers.expression) {
    auto c = pipeline.add_component("expression");
    auto expr = c.output<FaceExpressions>("face.expression", PayloadKind::emotion_scores);
    const auto classifier = providers.expression;
    const auto deadline = options.deadline;
    const int every = std::max(1, options.expression_every_n_frames);
    auto counter = std::make_shared<std::uint64_t>(0);
    c.input(out.tracked_frames, [=](const Message<Joined<FaceTracks, VideoFrame>>& m) {
      if ((*counter)++ % std::uint64_t(every) != 0) return;
      const auto& faces = m->primary.payload().faces;
      auto frame = m->secondary.shared();
      std::vector<std::function<std::optional<EmotionScores>()>> calls;
      for (const auto& f : faces) {
        const BoundingBox box = f.detection.bbox;
        calls.emplace_back(guarded([classifier, frame, box] {
          EmotionScores s = classifier->classify(crop(*frame, box));
          s.probabilities = enforce_distribution(s.probabilities);
          return s;
        }));
      }
      auto scores = call_all_with_deadline(std::move(calls), deadline);
      FaceExpressions result;
      for (std::size_t i = 0; i < faces.size(); ++i)
        if (scores[i] && *scores[i]) result.faces.push_back({faces[i].id, **scores[i]});
      expr.emit(std::move(result), m.originating_time());
    }, delivery);
    out.expressions = expr.stream();
  }

  if (providers.pose) {
    auto c = pipeline.add_component("pose");
    auto poses = c.output<PoseSet>("face.pose", PayloadKind::face_tracks);
    const auto estimator = providers.pose;
    const auto deadline = options.deadline;
    c.input(frames, [=](const Message<VideoFrame>& m) {
      auto frame = m.shared();
      auto result = flatten(call_with_deadline(guarded([estimator, frame] { return estimator->estimate(*frame); }), deadline));
      if (!result) return;
      for (const auto& s : *result)
        for (const auto& k : s.keypoints)
          if (!(k.confidence >= 0.0 && k.confidence <= 1.0)) throw InvalidScores("keypoint confidence out of range");
      poses.emit(PoseSet{std::move(*result)}, m.originating_time());
    }, delivery);
    out.poses = poses.stream();
  }
  return out;
}

}  // namespace affect::vision
