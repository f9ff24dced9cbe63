#pragma once

#include <memory>
#include <string>
#include <vector>

#include "affect/core/http_json.hpp"
#include "affect/core/provider_config.hpp"
#include "affect/vision/types.hpp"

namespace affect::vision {

// Pluggable model boundaries. Implementations must be callable from several
// threads at once (distinct faces of one frame are classified concurrently).

class FaceDetector {
public:
  virtual ~FaceDetector() = default;
  virtual std::vector<FaceDetection> detect(const VideoFrame& frame) const = 0;
};

class ExpressionClassifier {
public:
  virtual ~ExpressionClassifier() = default;
  virtual EmotionScores classify(const VideoFrame& face_patch) const = 0;
};

class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  virtual FaceEmbedding embed(const VideoFrame& face_patch) const = 0;
};

class PoseEstimator {
public:
  virtual ~PoseEstimator() = default;
  virtual std::vector<PoseKeypoints> estimate(const VideoFrame& frame) const = 0;
};

/// Finds uniform-colour rectangles that differ from the background colour
/// (the colour of pixel (0,0)). Components smaller than `min_side` on either
/// axis or not completely filled are ignored. Results are ordered left to
/// right, then top to bottom.
class MarkerFaceDetector final : public FaceDetector {
public:
  explicit MarkerFaceDetector(int min_side = 4) : min_side_(min_side) {}
  std::vector<FaceDetection> detect(const VideoFrame& frame) const override;

private:
  int min_side_;
};

/// Fixed landmark layout inside a box (eyes, brows, nose, mouth, jaw).
std::array<Landmark, kLandmarkCount> canonical_landmarks(const BoundingBox& box);

/// Deterministic softmax over the patch's mean chroma; a grey patch maps to
/// the uniform distribution.
class MockExpressionClassifier final : public ExpressionClassifier {
public:
  EmotionScores classify(const VideoFrame& face_patch) const override;
};

/// Unit-norm embedding derived from the patch's mean colour.
class MockEmbeddingProvider final : public EmbeddingProvider {
public:
  explicit MockEmbeddingProvider(int dimension = 128) : dimension_(dimension) {}
  FaceEmbedding embed(const VideoFrame& face_patch) const override;

private:
  int dimension_;
};

/// One fixed skeleton hung below every marker the marker detector finds.
class MockPoseEstimator final : public PoseEstimator {
public:
  std::vector<PoseKeypoints> estimate(const VideoFrame& frame) const override;

private:
  MarkerFaceDetector detector_;
};

/// Remote detector speaking the HTTP-JSON adapter contract:
///   request  {"width":W,"height":H,"frame_b64":"<rgb24>"}
///   response {"detections":[{"bbox":[x,y,w,h],"landmarks":[[x,y],...15],"confidence":c}]}
/// Boxes are clipped to the frame; malformed detections raise ParseError.
class HttpFaceDetector final : public FaceDetector {
public:
  explicit HttpFaceDetector(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::vector<FaceDetection> detect(const VideoFrame& frame) const override;

private:
  HttpEndpoint endpoint_;
};

/// Throws ProviderUnavailable for kind "none" or an http kind without url.
std::shared_ptr<const FaceDetector> make_face_detector(const ProviderConfig& config);
std::shared_ptr<const ExpressionClassifier> make_expression_classifier(const ProviderConfig& config);
std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const ProviderConfig& config);
std::shared_ptr<const PoseEstimator> make_pose_estimator(const ProviderConfig& config);

}  // namespace affect::vision
