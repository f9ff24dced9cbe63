#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "affect/vision/types.hpp"

namespace affect::vision {

struct TrackerParams {
  /// Match radius as a fraction of the previous box's longer side, per
  /// elapsed frame.
  double distance_scale = 0.5;
  /// Frames a track survives without a matching detection.
  int max_gap = 8;
};

struct TrackState {
  FaceTrack track;
  int missed = 0;  // consecutive frames without a match
};

/// Greedy nearest-centroid assignment. Candidate pairs within the gap-scaled
/// radius are taken in ascending distance order (ties: detection index, then
/// track id). Unmatched detections get fresh ids from `next_id`; tracks
/// unmatched for more than max_gap frames are retired. `previous` is updated
/// in place. Output follows detection order.
std::vector<FaceTrack> assign_track_ids(std::span<const FaceDetection> current,
                                        std::vector<TrackState>& previous, const TrackerParams& params,
                                        std::uint64_t& next_id);

class FaceTracker {
public:
  explicit FaceTracker(TrackerParams params = {}) : params_(params) {}

  std::vector<FaceTrack> update(std::span<const FaceDetection> detections) {
    return assign_track_ids(detections, tracks_, params_, next_id_);
  }
  const std::vector<TrackState>& tracks() const { return tracks_; }
  const TrackerParams& params() const { return params_; }

private:
  TrackerParams params_;
  std::vector<TrackState> tracks_;
  std::uint64_t next_id_ = 0;
};

}  // namespace affect::vision
