#pragma once

#include <chrono>
#include <memory>

#include "affect/audio/providers.hpp"
#include "affect/audio/prosody.hpp"
#include "affect/audio/vad.hpp"
#include "affect/core/pipeline.hpp"

namespace affect::audio {

struct AudioProviders {
  std::shared_ptr<const SpeechToText> speech;         // optional
  std::shared_ptr<const ValenceClassifier> valence;   // optional
};

struct AudioOptions {
  VadParams vad;
  SegmenterParams segmenter;
  PitchParams pitch;
  std::chrono::milliseconds valence_deadline{200};
  /// Buffers further apart than this from the expected next sample time
  /// restart framing.
  Duration max_discontinuity = std::chrono::milliseconds(1);
};

struct AudioStreams {
  Stream<VadFlag> vad;                // "audio.vad"
  Stream<ProsodyFeatures> prosody;    // "audio.prosody"
  Stream<SpeechSegment> segments;     // "audio.segments"
  Stream<Transcript> transcripts;     // "audio.transcript" (invalid when disabled)
  Stream<ValenceScores> valence;      // "audio.valence" (invalid when disabled)
};

/// Frames the audio stream into 20 ms VAD decisions and 40 ms prosody
/// frames, cuts speech segments, and fans segments out to the speech and
/// valence providers. Buffers at another sample rate are dropped.
/// Transcription calls run concurrently; transcripts are emitted in segment
/// order and a failed call simply yields no transcript.
AudioStreams add_audio(Pipeline& pipeline, const Stream<AudioBuffer>& audio, const AudioProviders& providers,
                       const AudioOptions& options = {}, SubscriptionOptions delivery = {});

}  // namespace affect::audio
