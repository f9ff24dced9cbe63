#include "affect/physiology/components.hpp"

#include <deque>
#include <map>

namespace affect::physiology {

namespace {

struct FaceTrace {
  std::deque<Eigen::Vector3d> rgb;
  std::deque<Timestamp> times;
  Timestamp last{};
  long since_full = 0;  // frames appended since the window first filled
};

}  // namespace

PhysioStreams add_physiology(Pipeline& pipeline, const Stream<Joined<vision::FaceTracks, vision::VideoFrame>>& frames,
                             const PhysioOptions& options, SubscriptionOptions delivery) {
  auto c = pipeline.add_component("physiology");
  auto hr = c.output<HrEstimate>("physio.hr", PayloadKind::hr_estimate);
  std::optional<Emitter<RespEstimate>> resp;
  if (options.respiration) resp = c.output<RespEstimate>("physio.resp", PayloadKind::resp_estimate);

  const auto max_gap = seconds_to_duration(options.gap_factor / options.frame_rate);
  const int window = std::max(options.hr.window_length, options.respiration ? options.resp.window_length : 0);
  auto traces = std::make_shared<std::map<std::uint64_t, FaceTrace>>();

  c.input(frames, [=](const Message<Joined<vision::FaceTracks, vision::VideoFrame>>& m) {
    const auto& faces = m->primary.payload().faces;
    const auto& frame = m->secondary.payload();
    const Timestamp t = m.originating_time();
    std::erase_if(*traces, [&](const auto& kv) {
      return std::none_of(faces.begin(), faces.end(), [&](const auto& f) { return f.id == kv.first; });
    });
    for (const auto& face : faces) {
      auto& tr = (*traces)[face.id];
      if (!tr.times.empty() && t - tr.last > max_gap) tr = FaceTrace{};
      tr.last = t;
      tr.rgb.push_back(spatial_average(frame, face.detection.bbox));
      tr.times.push_back(t);
      if (int(tr.rgb.size()) > window) {
        tr.rgb.pop_front();
        tr.times.pop_front();
      }
      if (int(tr.rgb.size()) < window) continue;

      RgbTrace trace;
      trace.samples.resize(window, 3);
      for (int i = 0; i < window; ++i) trace.samples.row(i) = tr.rgb[std::size_t(i)].transpose();
      trace.sample_rate = options.frame_rate;

      auto tail = [&](int length) {
        RgbTrace w{trace.samples.bottomRows(length), trace.sample_rate, tr.times[std::size_t(window - length)]};
        return w;
      };
      const long k = tr.since_full++;
      if (k % std::max(1, options.hr.hop) == 0) {
        HrEstimate e = estimate_hr(tail(options.hr.window_length), options.hr);
        e.face_id = face.id;
        e.window_start = tr.times[std::size_t(window - options.hr.window_length)];
        e.window_end = t;
        hr.emit(e, t);
      }
      if (resp && k % std::max(1, options.resp.hop) == 0) {
        try {
          RespEstimate e = estimate_respiration(tail(options.resp.window_length), options.resp);
          e.face_id = face.id;
          e.window_start = tr.times[std::size_t(window - options.resp.window_length)];
          e.window_end = t;
          resp->emit(e, t);
        } catch (const NoPoleInBand&) {
        }
      }
    }
  }, delivery);

  return {hr.stream(), resp ? resp->stream() : Stream<RespEstimate>{}};
}

}  // namespace affect::physiology
