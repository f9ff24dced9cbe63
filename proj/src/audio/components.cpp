#include "affect/audio/components.hpp"

#include <deque>
#include <future>

#include "affect/core/deadline.hpp"
#include "affect/core/distribution.hpp"

namespace affect::audio {

namespace {

constexpr Duration kFrameDuration = std::chrono::milliseconds(20);

struct Frontend {
  VoiceActivityDetector vad;
  SpeechSegmenter segmenter;
  std::vector<float> pending;
  Timestamp pending_start{};
  std::vector<float> previous;  // last frame, waiting for its prosody partner
  Timestamp previous_time{};
  bool started = false;

  std::optional<Timestamp> hold() const {
    std::optional<Timestamp> h;
    auto take = [&](Timestamp t) { h = h ? std::min(*h, t) : t; };
    if (!pending.empty()) take(pending_start);
    if (!previous.empty()) take(previous_time);
    if (auto s = segmenter.open_start()) take(*s);
    return h;
  }
};

struct PendingTranscript {
  Timestamp time;
  std::future<std::optional<Transcript>> result;
};

}  // namespace

AudioStreams add_audio(Pipeline& pipeline, const Stream<AudioBuffer>& audio, const AudioProviders& providers,
                       const AudioOptions& options, SubscriptionOptions delivery) {
  AudioStreams out;
  {
    auto c = pipeline.add_component("audio_frontend");
    auto vad = c.output<VadFlag>("audio.vad", PayloadKind::vad_flag);
    auto prosody = c.output<ProsodyFeatures>("audio.prosody", PayloadKind::prosody);
    auto segments = c.output<SpeechSegment>("audio.segments", PayloadKind::audio_buffer);
    auto st = std::make_shared<Frontend>();
    st->vad = VoiceActivityDetector(options.vad);
    st->segmenter = SpeechSegmenter(options.segmenter);
    const PitchParams pitch = options.pitch;
    const Duration max_gap = options.max_discontinuity;

    auto emit_segments = [segments](std::vector<SpeechSegment> done) {
      for (auto& s : done) {
        const Timestamp t = s.start_time;
        segments.emit(std::move(s), t);
      }
    };

    c.input(audio, [=](const Message<AudioBuffer>& m) mutable {
      if (m->sample_rate != kSampleRate) {
        c.count_drop(vad.descriptor());
        return;
      }
      const Timestamp t = m.originating_time();
      const Timestamp expected =
          st->pending_start + Duration(std::int64_t(st->pending.size()) * 1000000 / kSampleRate);
      const bool continuous = st->started && (t - expected <= max_gap && expected - t <= max_gap);
      if (!continuous) {
        emit_segments(st->segmenter.finish());
        st->pending.clear();
        st->previous.clear();
        st->pending_start = t;
        st->started = true;
      }
      const auto& samples = m->samples;
      st->pending.insert(st->pending.end(), samples.data(), samples.data() + samples.size());
      std::size_t used = 0;
      while (st->pending.size() - used >= std::size_t(kVadFrame)) {
        const std::span<const float> frame(st->pending.data() + used, kVadFrame);
        const Timestamp ft = st->pending_start;
        const VadFlag flag = st->vad.update(frame, ft);
        vad.emit(flag, ft);
        emit_segments(st->segmenter.push(frame, flag));
        if (!st->previous.empty()) {
          Eigen::VectorXf both(kProsodyFrame);
          both.head(kVadFrame) = Eigen::Map<const Eigen::VectorXf>(st->previous.data(), kVadFrame);
          both.tail(kVadFrame) = Eigen::Map<const Eigen::VectorXf>(frame.data(), kVadFrame);
          prosody.emit(extract_prosody(both, st->previous_time, pitch), st->previous_time);
        }
        st->previous.assign(frame.begin(), frame.end());
        st->previous_time = ft;
        st->pending_start += kFrameDuration;
        used += kVadFrame;
      }
      st->pending.erase(st->pending.begin(), st->pending.begin() + std::ptrdiff_t(used));
    }, delivery);
    c.hold([st] { return st->hold(); });
    c.on_close([st, emit_segments] { emit_segments(st->segmenter.finish()); });
    out.vad = vad.stream();
    out.prosody = prosody.stream();
    out.segments = segments.stream();
  }

  if (providers.speech) {
    auto c = pipeline.add_component("transcriber");
    auto text = c.output<Transcript>("audio.transcript", PayloadKind::transcript);
    auto queue = std::make_shared<std::deque<PendingTranscript>>();
    const auto stt = providers.speech;
    auto drain = [c, text, queue](bool wait) mutable {
      while (!queue->empty()) {
        auto& front = queue->front();
        if (!wait && front.result.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return;
        if (auto r = front.result.get()) {
          text.emit(std::move(*r), front.time);
        } else {
          c.count_drop(text.descriptor());
        }
        queue->pop_front();
      }
    };
    c.input(out.segments, [queue, stt](const Message<SpeechSegment>& m) {
      auto segment = m.shared();
      queue->push_back({m.originating_time(), std::async(std::launch::async, [stt, segment]() -> std::optional<Transcript> {
                          try {
                            return Transcript{stt->transcribe(*segment), segment->start_time, segment->end_time};
                          } catch (const Error&) {
                            return std::nullopt;
                          }
                        })});
    }, delivery);
    c.on_progress([drain]() mutable { drain(false); });
    c.on_close([drain]() mutable { drain(true); });
    c.hold([queue]() -> std::optional<Timestamp> {
      if (queue->empty()) return std::nullopt;
      return queue->front().time;
    });
    out.transcripts = text.stream();
  }

  if (providers.valence) {
    auto c = pipeline.add_component("valence");
    auto val = c.output<ValenceScores>("audio.valence", PayloadKind::valence);
    const auto model = providers.valence;
    const PitchParams pitch = options.pitch;
    const auto deadline = options.valence_deadline;
    c.input(out.segments, [=](const Message<SpeechSegment>& m) {
      auto input = std::make_shared<ValenceInput>();
      input->prosody = prosody_track(m->samples, m->start_time, pitch);
      input->mel = mel_features(m->samples);
      auto probs = flatten(call_with_deadline(guarded([model, input] {
        return enforce_distribution(model->classify(*input));
      }), deadline));
      if (!probs) return;
      val.emit(ValenceScores{*probs, m->start_time, m->end_time}, m.originating_time());
    }, delivery);
    out.valence = val.stream();
  }
  return out;
}

}  // namespace affect::audio
