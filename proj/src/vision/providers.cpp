#include "affect/vision/providers.hpp"

#include <algorithm>
#include <cmath>

#include "affect/core/base64.hpp"
#include "affect/core/distribution.hpp"
#include "affect/vision/identity.hpp"

namespace affect::vision {

namespace {

Eigen::Vector3d mean_color(const VideoFrame& patch) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  const std::size_t n = std::size_t(patch.width) * std::size_t(patch.height);
  for (std::size_t i = 0; i < n; ++i)
    sum += Eigen::Vector3d(patch.pixels[3 * i], patch.pixels[3 * i + 1], patch.pixels[3 * i + 2]);
  return n ? Eigen::Vector3d(sum / double(n)) : sum;
}

bool same_color(const std::uint8_t* a, const std::uint8_t* b) { return a[0] == b[0] && a[1] == b[1] && a[2] == b[2]; }

}  // namespace

std::array<Landmark, kLandmarkCount> canonical_landmarks(const BoundingBox& box) {
  // eyes(4 corners), brows(2), eye centres(2), nose(3), mouth(3), chin(1)
  static constexpr std::array<std::array<double, 2>, kLandmarkCount> layout{{
      {0.20, 0.38}, {0.40, 0.38}, {0.60, 0.38}, {0.80, 0.38},
      {0.30, 0.28}, {0.70, 0.28},
      {0.30, 0.38}, {0.70, 0.38},
      {0.50, 0.45}, {0.42, 0.60}, {0.58, 0.60},
      {0.32, 0.75}, {0.50, 0.78}, {0.68, 0.75},
      {0.50, 0.95},
  }};
  std::array<Landmark, kLandmarkCount> out{};
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    const int x = box.x + int(std::lround(layout[i][0] * (box.w - 1)));
    const int y = box.y + int(std::lround(layout[i][1] * (box.h - 1)));
    out[i] = {x, y};
  }
  return out;
}

std::vector<FaceDetection> MarkerFaceDetector::detect(const VideoFrame& frame) const {
  if (!frame.valid()) throw std::invalid_argument("invalid video frame");
  const int w = frame.width, h = frame.height;
  const std::uint8_t* background = frame.at(0, 0);
  std::vector<std::uint8_t> seen(std::size_t(w) * h, 0);
  std::vector<std::pair<int, int>> stack;
  std::vector<FaceDetection> out;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (seen[std::size_t(y) * w + x] || same_color(frame.at(x, y), background)) continue;
      // flood fill one uniform-colour 4-connected component
      const std::uint8_t* color = frame.at(x, y);
      int x0 = x, x1 = x, y0 = y, y1 = y;
      long count = 0;
      stack.assign(1, {x, y});
      seen[std::size_t(y) * w + x] = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        ++count;
        x0 = std::min(x0, cx), x1 = std::max(x1, cx), y0 = std::min(y0, cy), y1 = std::max(y1, cy);
        const std::pair<int, int> nbrs[4] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
        for (auto [nx, ny] : nbrs) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          auto& s = seen[std::size_t(ny) * w + nx];
          if (s || !same_color(frame.at(nx, ny), color)) continue;
          s = 1;
          stack.emplace_back(nx, ny);
        }
      }
      const BoundingBox box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      if (box.w < min_side_ || box.h < min_side_ || count != box.area()) continue;
      FaceDetection det;
      det.bbox = box;
      det.landmarks = canonical_landmarks(box);
      det.confidence = 1.0;
      out.push_back(det);
    }
  }
  std::sort(out.begin(), out.end(), [](const FaceDetection& a, const FaceDetection& b) {
    return std::tie(a.bbox.x, a.bbox.y) < std::tie(b.bbox.x, b.bbox.y);
  });
  return out;
}

EmotionScores MockExpressionClassifier::classify(const VideoFrame& face_patch) const {
  if (!face_patch.valid()) throw std::invalid_argument("invalid face patch");
  const Eigen::Vector3d c = mean_color(face_patch);
  const Eigen::Vector3d chroma = (c.array() - c.mean()).matrix() / 64.0;
  // one chroma direction per class; grey (zero chroma) gives equal logits
  static const Eigen::Matrix<double, kExpressionCount, 3> weights =
      (Eigen::Matrix<double, kExpressionCount, 3>() <<
           0.0,  0.0,  0.0,
           1.5,  0.5, -2.0,
           0.5,  1.5, -2.0,
          -1.0, -0.5,  1.5,
           2.0, -1.0, -1.0,
          -0.5,  2.0, -1.5,
          -1.5, -0.5,  2.0,
           1.0, -2.0,  1.0).finished();
  const Eigen::Matrix<double, kExpressionCount, 1> logits = weights * chroma;
  std::array<double, kExpressionCount> l{};
  for (std::size_t i = 0; i < kExpressionCount; ++i) l[i] = logits(Eigen::Index(i));
  return {softmax(l)};
}

FaceEmbedding MockEmbeddingProvider::embed(const VideoFrame& face_patch) const {
  if (!face_patch.valid()) throw std::invalid_argument("invalid face patch");
  const Eigen::Vector3d c = mean_color(face_patch);
  FaceEmbedding v(dimension_);
  for (int i = 0; i < dimension_; ++i) {
    v(i) = std::cos(0.37 * i + 0.011 * c.x()) + std::sin(0.73 * i + 0.013 * c.y()) +
           std::cos(1.31 * i + 0.017 * c.z());
  }
  return normalized_embedding(v);
}

std::vector<PoseKeypoints> MockPoseEstimator::estimate(const VideoFrame& frame) const {
  // joint offsets in units of face height, relative to the face centre
  static constexpr std::array<std::array<double, 2>, kPoseJointCount> layout{{
      {0.0, 0.0},   {-0.2, -0.15}, {0.2, -0.15}, {-0.45, 0.0}, {0.45, 0.0},  {-0.9, 1.2},
      {0.9, 1.2},   {-1.2, 2.2},   {1.2, 2.2},   {-1.3, 3.1},  {1.3, 3.1},   {-0.6, 3.2},
      {0.6, 3.2},   {-0.6, 4.6},   {0.6, 4.6},   {-0.6, 6.0},  {0.6, 6.0},
  }};
  std::vector<PoseKeypoints> out;
  for (const auto& det : detector_.detect(frame)) {
    const Eigen::Vector2d centre = det.bbox.centroid();
    const double unit = det.bbox.h;
    PoseKeypoints skel;
    for (std::size_t j = 0; j < kPoseJointCount; ++j) {
      const double x = centre.x() + layout[j][0] * unit;
      const double y = centre.y() + layout[j][1] * unit;
      const bool visible = x >= 0 && y >= 0 && x < frame.width && y < frame.height;
      skel.keypoints[j] = {kCocoJoints[j], std::clamp(x, 0.0, double(frame.width - 1)),
                           std::clamp(y, 0.0, double(frame.height - 1)), visible ? 0.9 : 0.1};
    }
    out.push_back(skel);
  }
  return out;
}

std::vector<FaceDetection> HttpFaceDetector::detect(const VideoFrame& frame) const {
  if (!frame.valid()) throw std::invalid_argument("invalid video frame");
  nlohmann::json req{{"width", frame.width}, {"height", frame.height}, {"frame_b64", base64_encode(frame.pixels)}};
  const nlohmann::json res = post_json(endpoint_, req);
  std::vector<FaceDetection> out;
  try {
    for (const auto& d : res.at("detections")) {
      const auto& b = d.at("bbox");
      if (b.size() != 4) throw ParseError("bbox must have 4 entries");
      int x = b[0].get<int>(), y = b[1].get<int>(), w = b[2].get<int>(), h = b[3].get<int>();
      const int x1 = std::min(frame.width, x + w), y1 = std::min(frame.height, y + h);
      x = std::max(0, x), y = std::max(0, y);
      if (x1 <= x || y1 <= y) continue;
      FaceDetection det;
      det.bbox = {x, y, x1 - x, y1 - y};
      const auto& lm = d.at("landmarks");
      if (lm.size() != kLandmarkCount) throw ParseError("expected 15 landmarks");
      for (std::size_t i = 0; i < kLandmarkCount; ++i) det.landmarks[i] = {lm[i].at(0).get<int>(), lm[i].at(1).get<int>()};
      det.confidence = std::clamp(d.value("confidence", 1.0), 0.0, 1.0);
      out.push_back(det);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed detector response: ") + e.what());
  }
  std::stable_sort(out.begin(), out.end(), [](const FaceDetection& a, const FaceDetection& b) {
    return std::tie(a.bbox.x, a.bbox.y) < std::tie(b.bbox.x, b.bbox.y);
  });
  return out;
}

std::shared_ptr<const FaceDetector> make_face_detector(const ProviderConfig& config) {
  if (config.kind == "mock") return std::make_shared<MarkerFaceDetector>();
  if (config.kind == "http") {
    if (config.endpoint.url.empty()) throw ProviderUnavailable("face detector endpoint not configured");
    return std::make_shared<HttpFaceDetector>(config.endpoint);
  }
  throw ProviderUnavailable("face detector '" + config.kind + "' not available");
}

std::shared_ptr<const ExpressionClassifier> make_expression_classifier(const ProviderConfig& config) {
  if (config.kind == "mock") return std::make_shared<MockExpressionClassifier>();
  throw ProviderUnavailable("expression classifier '" + config.kind + "' not available");
}

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const ProviderConfig& config) {
  if (config.kind == "mock") return std::make_shared<MockEmbeddingProvider>();
  throw ProviderUnavailable("embedding provider '" + config.kind + "' not available");
}

std::shared_ptr<const PoseEstimator> make_pose_estimator(const ProviderConfig& config) {
  if (config.kind == "mock") return std::make_shared<MockPoseEstimator>();
  throw ProviderUnavailable("pose estimator '" + config.kind + "' not available");
}

}  // namespace affect::vision
