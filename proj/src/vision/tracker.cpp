#include "affect/vision/tracker.hpp"

#include <algorithm>
#include <optional>
#include <tuple>

namespace affect::vision {

std::vector<FaceTrack> assign_track_ids(std::span<const FaceDetection> current,
                                        std::vector<TrackState>& previous, const TrackerParams& params,
                                        std::uint64_t& next_id) {
  struct Candidate {
    double distance;
    std::size_t detection;
    std::size_t track;
  };
  std::vector<Candidate> candidates;
  for (std::size_t d = 0; d < current.size(); ++d) {
    const Eigen::Vector2d c = current[d].bbox.centroid();
    for (std::size_t t = 0; t < previous.size(); ++t) {
      const auto& prev = previous[t].track.detection.bbox;
      const double radius = params.distance_scale * std::max(prev.w, prev.h) * (previous[t].missed + 1);
      const double dist = (c - prev.centroid()).norm();
      if (dist <= radius) candidates.push_back({dist, d, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.detection, previous[a.track].track.id) <
           std::tie(b.distance, b.detection, previous[b.track].track.id);
  });

  std::vector<std::optional<std::size_t>> det_to_track(current.size());
  std::vector<bool> track_used(previous.size(), false);
  for (const auto& c : candidates) {
    if (det_to_track[c.detection] || track_used[c.track]) continue;
    det_to_track[c.detection] = c.track;
    track_used[c.track] = true;
  }

  std::vector<FaceTrack> out;
  out.reserve(current.size());
  std::vector<TrackState> next;
  for (std::size_t d = 0; d < current.size(); ++d) {
    FaceTrack ft;
    ft.detection = current[d];
    ft.id = det_to_track[d] ? previous[*det_to_track[d]].track.id : next_id++;
    out.push_back(ft);
    next.push_back({ft, 0});
  }
  for (std::size_t t = 0; t < previous.size(); ++t) {
    if (track_used[t]) continue;
    if (previous[t].missed + 1 <= params.max_gap) next.push_back({previous[t].track, previous[t].missed + 1});
  }
  previous = std::move(next);
  return out;
}

}  // namespace affect::vision
