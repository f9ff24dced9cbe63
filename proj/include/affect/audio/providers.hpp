#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affect/audio/types.hpp"
#include "affect/core/http_json.hpp"
#include "affect/core/provider_config.hpp"

namespace affect::audio {

class SpeechToText {
public:
  virtual ~SpeechToText() = default;
  virtual std::string transcribe(const SpeechSegment& segment) const = 0;
};

/// "mock-transcript-<duration in ms>ms"
class MockSpeechToText final : public SpeechToText {
public:
  std::string transcribe(const SpeechSegment& segment) const override;
};

/// Cloud recogniser over HTTP-JSON:
///   request  {"audio_b64":"<int16 little-endian PCM>","sample_rate":16000}
///   response {"text":"..."}
class HttpSpeechToText final : public SpeechToText {
public:
  explicit HttpSpeechToText(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string transcribe(const SpeechSegment& segment) const override;

private:
  HttpEndpoint endpoint_;
};

/// Features of one speech segment handed to the valence model.
struct ValenceInput {
  std::vector<ProsodyFeatures> prosody;
  Eigen::MatrixXd mel;  // frames x filters
};

class ValenceClassifier {
public:
  virtual ~ValenceClassifier() = default;
  /// [negative, neutral, positive]
  virtual std::array<double, 3> classify(const ValenceInput& input) const = 0;
};

/// softmax([-z, 0, z]) with z = 4 * mean RMS * tanh((mean voiced pitch - 150) / 50);
/// silence gives the uniform distribution.
class MockValenceClassifier final : public ValenceClassifier {
public:
  std::array<double, 3> classify(const ValenceInput& input) const override;
};

/// PCM floats to int16 little-endian bytes, clipping to [-1, 1].
std::vector<std::uint8_t> to_pcm16le(const Eigen::VectorXf& samples);
Eigen::VectorXf from_pcm16le(const std::vector<std::uint8_t>& bytes);

/// Throws ProviderUnavailable for kind "none" or an http kind without url.
std::shared_ptr<const SpeechToText> make_speech_to_text(const ProviderConfig& config);
std::shared_ptr<const ValenceClassifier> make_valence_classifier(const ProviderConfig& config);

}  // namespace affect::audio
