#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "affect/core/distribution.hpp"

namespace affect::vision {

/// Integer pixel rectangle, top-left anchored.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long area() const { return long(w) * long(h); }
  Eigen::Vector2d centroid() const { return {x + w / 2.0, y + h / 2.0}; }
  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width && y + h <= height;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Landmark {
  int x = 0;
  int y = 0;
  friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// Row-major interleaved RGB, 8 bits per channel.
struct VideoFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  VideoFrame() = default;
  VideoFrame(int w, int h) : width(w), height(h), pixels(std::size_t(w) * std::size_t(h) * 3, 0) {}

  bool valid() const {
    return width > 0 && height > 0 && pixels.size() == std::size_t(width) * std::size_t(height) * 3;
  }
  const std::uint8_t* at(int x, int y) const { return &pixels[(std::size_t(y) * width + x) * 3]; }
  std::uint8_t* at(int x, int y) { return &pixels[(std::size_t(y) * width + x) * 3]; }

  void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b) { fill_rect({0, 0, width, height}, r, g, b); }
  void fill_rect(const BoundingBox& box, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

inline constexpr std::size_t kLandmarkCount = 15;

struct FaceDetection {
  BoundingBox bbox;
  std::array<Landmark, kLandmarkCount> landmarks{};
  double confidence = 1.0;
};

struct FaceTrack {
  FaceDetection detection;
  std::uint64_t id = 0;
  /// True when the id came from a gallery match rather than the tracker.
  bool recognized = false;
};

/// All tracked faces of one frame, in detection (left-to-right) order.
struct FaceTracks {
  std::vector<FaceTrack> faces;
};

enum class Expression : std::size_t { neutral, happiness, surprise, sadness, anger, disgust, fear, contempt };
inline constexpr std::size_t kExpressionCount = 8;
inline constexpr std::array<std::string_view, kExpressionCount> kExpressionNames{
    "neutral", "happiness", "surprise", "sadness", "anger", "disgust", "fear", "contempt"};

struct EmotionScores {
  std::array<double, kExpressionCount> probabilities{};
  double operator[](Expression e) const { return probabilities[std::size_t(e)]; }
};

/// Per-face expression results of one frame.
struct FaceExpressions {
  struct Entry {
    std::uint64_t face_id = 0;
    EmotionScores scores;
  };
  std::vector<Entry> faces;
};

inline constexpr std::size_t kPoseJointCount = 17;
inline constexpr std::array<std::string_view, kPoseJointCount> kCocoJoints{
    "nose",        "left_eye",       "right_eye",  "left_ear",    "right_ear",  "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist",  "right_wrist", "left_hip",
    "right_hip",   "left_knee",      "right_knee", "left_ankle",  "right_ankle"};

struct Keypoint {
  std::string_view joint;
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

struct PoseKeypoints {
  std::array<Keypoint, kPoseJointCount> keypoints{};
};

struct PoseSet {
  std::vector<PoseKeypoints> skeletons;
};

template <typename Scalar>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using FaceEmbedding = Embedding<double>;

/// Copies the pixels under `box`. Throws std::out_of_range when the box
/// leaves the frame.
VideoFrame crop(const VideoFrame& frame, const BoundingBox& box);

}  // namespace affect::vision
