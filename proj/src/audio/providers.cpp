#include "affect/audio/providers.hpp"

#include <algorithm>
#include <cmath>

#include "affect/core/base64.hpp"
#include "affect/core/distribution.hpp"

namespace affect::audio {

std::string MockSpeechToText::transcribe(const SpeechSegment& segment) const {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(segment.duration()).count();
  return "mock-transcript-" + std::to_string(ms) + "ms";
}

std::vector<std::uint8_t> to_pcm16le(const Eigen::VectorXf& samples) {
  std::vector<std::uint8_t> out(std::size_t(samples.size()) * 2);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const float v = std::clamp(samples(i), -1.0f, 1.0f);
    const auto s = std::int16_t(std::lround(v * 32767.0f));
    const auto u = std::uint16_t(s);
    out[std::size_t(2 * i)] = std::uint8_t(u & 0xff);
    out[std::size_t(2 * i + 1)] = std::uint8_t(u >> 8);
  }
  return out;
}

Eigen::VectorXf from_pcm16le(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 2 != 0) throw ParseError("pcm16 payload has an odd byte count");
  Eigen::VectorXf out(Eigen::Index(bytes.size() / 2));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const auto u = std::uint16_t(bytes[std::size_t(2 * i)] | (bytes[std::size_t(2 * i + 1)] << 8));
    out(i) = float(std::int16_t(u)) / 32768.0f;
  }
  return out;
}

std::string HttpSpeechToText::transcribe(const SpeechSegment& segment) const {
  const nlohmann::json req{{"audio_b64", base64_encode(to_pcm16le(segment.samples))},
                           {"sample_rate", segment.sample_rate}};
  const nlohmann::json res = post_json(endpoint_, req);
  if (!res.is_object() || !res.contains("text") || !res["text"].is_string())
    throw ParseError("speech response lacks a text field");
  return res["text"].get<std::string>();
}

std::array<double, 3> MockValenceClassifier::classify(const ValenceInput& input) const {
  double energy = 0.0, pitch = 0.0;
  int voiced = 0;
  for (const auto& f : input.prosody) {
    energy += f.energy_rms;
    if (f.pitch_hz) {
      pitch += *f.pitch_hz;
      ++voiced;
    }
  }
  if (!input.prosody.empty()) energy /= double(input.prosody.size());
  const double tone = voiced ? std::tanh((pitch / voiced - 150.0) / 50.0) : 0.0;
  const double z = 4.0 * energy * tone;
  return softmax<3>({-z, 0.0, z});
}

std::shared_ptr<const SpeechToText> make_speech_to_text(const ProviderConfig& config) {
  if (config.kind == "mock") return std::make_shared<MockSpeechToText>();
  if (config.kind == "http") {
    if (config.endpoint.url.empty()) throw ProviderUnavailable("speech endpoint not configured");
    return std::make_shared<HttpSpeechToText>(config.endpoint);
  }
  throw ProviderUnavailable("speech provider '" + config.kind + "' not available");
}

std::shared_ptr<const ValenceClassifier> make_valence_classifier(const ProviderConfig& config) {
  if (config.kind == "mock") return std::make_shared<MockValenceClassifier>();
  throw ProviderUnavailable("valence provider '" + config.kind + "' not available");
}

}  // namespace affect::audio
