#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "affect/core/error.hpp"
#include "affect/core/provider_config.hpp"
#include "json.hpp"

namespace affect::app {

/// A config key that is unknown, mistyped or out of range. `key()` is the
/// dotted path, e.g. "vision.max_gap" or "bus.topics[1]".
class ValidationError : public Error {
public:
  ValidationError(std::string key, const std::string& reason)
      : Error("validation_error", key + ": " + reason), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

struct VisionConfig {
  bool enabled = true;
  ProviderConfig detector{"mock", {}};
  ProviderConfig expression{"mock", {}};
  ProviderConfig embedding{"none", {}};
  ProviderConfig pose{"none", {}};
  std::string gallery;  // JSON file of {"id","embedding"} entries
  double identity_threshold = 0.5;
  double distance_scale = 0.5;
  int max_gap = 8;
  int expression_every_n_frames = 1;
  std::int64_t deadline_ms = 200;
  bool operator==(const VisionConfig&) const = default;
};

struct PhysiologyConfig {
  bool enabled = true;
  bool respiration = true;
  bool operator==(const PhysiologyConfig&) const = default;
};

struct SpeechConfig {
  bool enabled = true;
  ProviderConfig stt{"mock", {}};
  ProviderConfig valence{"mock", {}};
  double vad_margin_db = 6.0;
  bool operator==(const SpeechConfig&) const = default;
};

struct LanguageSentimentConfig {
  bool enabled = true;
  ProviderConfig provider{"lexicon", {}};
  std::string lexicon_dir;  // empty: built-in lists
  bool operator==(const LanguageSentimentConfig&) const = default;
};

struct ContextConfig {
  bool enabled = true;
  std::string title_salt;
  std::string email_model;  // trained model JSON; needed only for email bodies
  bool operator==(const ContextConfig&) const = default;
};

struct StoreConfig {
  std::string path = "session.ndjson";
  std::uint64_t max_bytes = 0;  // 0: unlimited
  bool sync_every_row = false;
  std::optional<HttpEndpoint> http;  // remote row sink in place of the file
  bool operator==(const StoreConfig&) const = default;
};

struct BusConfig {
  bool enabled = false;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7310;  // 0: any free port
  std::string token;
  std::size_t queue_limit = 1024;
  std::vector<std::string> topics{"*"};
  bool operator==(const BusConfig&) const = default;
};

struct IngestConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7300;
  bool operator==(const IngestConfig&) const = default;
};

struct PipelineConfig {
  std::string replay;  // trace path; empty when capturing live
  double replay_speed = 0.0;  // 0: as fast as possible
  std::optional<IngestConfig> ingest;  // live frames/audio/context over TCP
  bool consent = false;
  std::string consent_record = "consent.json";
  double video_fps = 15.0;
  int audio_sample_rate = 16000;
  std::int64_t window_ms = 1000;
  VisionConfig vision;
  PhysiologyConfig physiology;
  SpeechConfig speech;
  LanguageSentimentConfig language_sentiment;
  ContextConfig context;
  StoreConfig store;
  BusConfig bus;

  bool live() const { return replay.empty() && ingest.has_value(); }
  bool operator==(const PipelineConfig&) const = default;
};

/// Validates a config document and fills defaults. Relative paths are kept
/// as written. Throws ValidationError naming the first offending key.
PipelineConfig parse_config(const nlohmann::json& doc);
/// Reads a JSON config file; ParseError when it is not JSON.
PipelineConfig load_config(const std::filesystem::path& path);
/// Full document with every default spelled out; parse_config inverts it.
nlohmann::ordered_json to_json(const PipelineConfig& config);

/// Resolves relative file paths against `base` (the config file's directory).
void resolve_paths(PipelineConfig& config, const std::filesystem::path& base);

/// Environment variables that may replace a token, and nothing else.
struct TokenOverride {
  std::string variable;
  /// The token to replace, or null when that endpoint is not configured.
  std::function<std::string*(PipelineConfig&)> target;
};
const std::vector<TokenOverride>& token_overrides();
/// Applies every set token variable; `getenv` is injectable for tests.
void apply_env_overrides(PipelineConfig& config,
                         const std::function<std::optional<std::string>(const std::string&)>& getenv);
void apply_env_overrides(PipelineConfig& config);

}  // namespace affect::app
