#pragma once

#include "affect/core/pipeline.hpp"
#include "affect/physiology/vitals.hpp"
#include "affect/vision/types.hpp"

namespace affect::physiology {

struct PhysioOptions {
  HrParams hr;
  RespParams resp;
  bool respiration = true;
  double frame_rate = 15.0;
  /// A frame interval above gap_factor / frame_rate breaks contiguity.
  double gap_factor = 1.5;
};

struct PhysioStreams {
  Stream<HrEstimate> hr;      // "physio.hr"
  Stream<RespEstimate> resp;  // "physio.resp" (invalid when disabled)
};

/// Per-face RGB traces built from tracked frames. A face missing from a
/// frame, or a frame gap, restarts that face's window. Estimates are stamped
/// with the last frame of their window.
PhysioStreams add_physiology(Pipeline& pipeline, const Stream<Joined<vision::FaceTracks, vision::VideoFrame>>& frames,
                             const PhysioOptions& options = {}, SubscriptionOptions delivery = {});

}  // namespace affect::physiology
