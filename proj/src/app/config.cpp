#include "affect/app/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>

#include "affect/sinks/bus.hpp"

namespace affect::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join_key(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Typed, path-aware access to one config object. Unknown keys are
/// rejected up front so the first error names the stray key.
class ObjectReader {
public:
  ObjectReader(const json& doc, std::string path, std::initializer_list<const char*> allowed)
      : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : doc_.items())
      if (!keys.count(k)) throw ValidationError(join_key(path_, k), "unknown key");
  }

  bool has(const char* key) const { return doc_.contains(key); }
  const json& at(const char* key) const { return doc_.at(key); }
  std::string key(const char* k) const { return join_key(path_, k); }

  void boolean(const char* k, bool& out) const {
    if (!has(k)) return;
    if (!at(k).is_boolean()) throw ValidationError(key(k), "must be true or false");
    out = at(k).get<bool>();
  }

  void string(const char* k, std::string& out) const {
    if (!has(k)) return;
    if (!at(k).is_string()) throw ValidationError(key(k), "must be a string");
    out = at(k).get<std::string>();
  }

  template <class Int>
  void integer(const char* k, Int& out, std::int64_t lo, std::int64_t hi) const {
    if (!has(k)) return;
    const auto& v = at(k);
    if (!v.is_number_integer()) throw ValidationError(key(k), "must be an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<std::int64_t>::max()))
      throw ValidationError(key(k), "out of range");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi)
      throw ValidationError(key(k), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out = Int(x);
  }

  void real(const char* k, double& out, double lo, double hi) const {
    if (!has(k)) return;
    if (!at(k).is_number()) throw ValidationError(key(k), "must be a number");
    const double x = at(k).get<double>();
    if (!(x >= lo && x <= hi)) throw ValidationError(key(k), "out of range");
    out = x;
  }

private:
  const json& doc_;
  std::string path_;
};

constexpr std::int64_t kMaxInt = std::numeric_limits<std::int64_t>::max();

HttpEndpoint read_endpoint(const json& doc, const std::string& path) {
  ObjectReader r(doc, path, {"url", "token", "timeout_ms"});
  HttpEndpoint e;
  r.string("url", e.url);
  r.string("token", e.token);
  std::int64_t timeout = e.timeout.count();
  r.integer("timeout_ms", timeout, 1, 3600000);
  e.timeout = std::chrono::milliseconds(timeout);
  if (e.url.empty()) throw ValidationError(r.key("url"), "required");
  if (!e.url.starts_with("http://") && !e.url.starts_with("https://"))
    throw ValidationError(r.key("url"), "must be an http:// or https:// URL");
  return e;
}

ProviderConfig read_provider(const ObjectReader& parent, const char* k, ProviderConfig fallback,
                             std::initializer_list<const char*> kinds) {
  if (!parent.has(k)) return fallback;
  const std::string path = parent.key(k);
  ObjectReader r(parent.at(k), path, {"kind", "url", "token", "timeout_ms"});
  ProviderConfig p;
  p.kind = fallback.kind;
  r.string("kind", p.kind);
  if (std::find_if(kinds.begin(), kinds.end(), [&](const char* s) { return p.kind == s; }) == kinds.end())
    throw ValidationError(r.key("kind"), "unsupported provider kind '" + p.kind + "'");
  if (p.kind == "http") {
    json endpoint = json::object();
    for (const char* f : {"url", "token", "timeout_ms"})
      if (r.has(f)) endpoint[f] = r.at(f);
    p.endpoint = read_endpoint(endpoint, path);
  } else {
    r.string("token", p.endpoint.token);
    if (r.has("url")) throw ValidationError(r.key("url"), "only http providers take a url");
    if (r.has("timeout_ms")) throw ValidationError(r.key("timeout_ms"), "only http providers take a timeout");
  }
  return p;
}

ordered_json provider_json(const ProviderConfig& p) {
  ordered_json j;
  j["kind"] = p.kind;
  if (p.kind == "http") {
    j["url"] = p.endpoint.url;
    j["timeout_ms"] = p.endpoint.timeout.count();
  }
  j["token"] = p.endpoint.token;
  return j;
}

ordered_json endpoint_json(const HttpEndpoint& e) {
  ordered_json j;
  j["url"] = e.url;
  j["token"] = e.token;
  j["timeout_ms"] = e.timeout.count();
  return j;
}

}  // namespace

PipelineConfig parse_config(const json& doc) {
  PipelineConfig c;
  ObjectReader r(doc, "",
                 {"replay", "replay_speed", "ingest", "consent", "consent_record", "video", "audio", "aggregation", "vision",
                  "physiology", "speech", "language_sentiment", "context", "store", "bus"});
  r.string("replay", c.replay);
  r.real("replay_speed", c.replay_speed, 0.0, 1e6);
  if (r.has("ingest")) {
    ObjectReader in(r.at("ingest"), "ingest", {"host", "port"});
    IngestConfig ic;
    in.string("host", ic.host);
    in.integer("port", ic.port, 0, 65535);
    c.ingest = ic;
  }
  r.boolean("consent", c.consent);
  r.string("consent_record", c.consent_record);
  if (r.has("video")) {
    ObjectReader v(r.at("video"), "video", {"fps"});
    v.real("fps", c.video_fps, 1.0, 240.0);
  }
  if (r.has("audio")) {
    ObjectReader a(r.at("audio"), "audio", {"sample_rate"});
    a.integer("sample_rate", c.audio_sample_rate, 16000, 16000);
  }
  if (r.has("aggregation")) {
    ObjectReader a(r.at("aggregation"), "aggregation", {"window_ms"});
    a.integer("window_ms", c.window_ms, 1, 3600000);
  }
  if (r.has("vision")) {
    ObjectReader v(r.at("vision"), "vision",
                   {"enabled", "detector", "expression", "embedding", "pose", "gallery", "identity_threshold",
                    "distance_scale", "max_gap", "expression_every_n_frames", "deadline_ms"});
    auto& o = c.vision;
    v.boolean("enabled", o.enabled);
    o.detector = read_provider(v, "detector", o.detector, {"mock", "http"});
    o.expression = read_provider(v, "expression", o.expression, {"mock", "none"});
    o.embedding = read_provider(v, "embedding", o.embedding, {"mock", "none"});
    o.pose = read_provider(v, "pose", o.pose, {"mock", "none"});
    v.string("gallery", o.gallery);
    v.real("identity_threshold", o.identity_threshold, -1.0, 1.0);
    v.real("distance_scale", o.distance_scale, 0.0, 100.0);
    v.integer("max_gap", o.max_gap, 0, 100000);
    v.integer("expression_every_n_frames", o.expression_every_n_frames, 1, 100000);
    v.integer("deadline_ms", o.deadline_ms, 1, 3600000);
    if (!o.gallery.empty() && o.embedding.kind == "none")
      throw ValidationError("vision.gallery", "needs an embedding provider");
  }
  if (r.has("physiology")) {
    ObjectReader p(r.at("physiology"), "physiology", {"enabled", "respiration"});
    p.boolean("enabled", c.physiology.enabled);
    p.boolean("respiration", c.physiology.respiration);
  }
  if (r.has("speech")) {
    ObjectReader s(r.at("speech"), "speech", {"enabled", "stt", "valence", "vad_margin_db"});
    s.boolean("enabled", c.speech.enabled);
    c.speech.stt = read_provider(s, "stt", c.speech.stt, {"mock", "http", "none"});
    c.speech.valence = read_provider(s, "valence", c.speech.valence, {"mock", "none"});
    s.real("vad_margin_db", c.speech.vad_margin_db, 0.0, 100.0);
  }
  if (r.has("language_sentiment")) {
    ObjectReader l(r.at("language_sentiment"), "language_sentiment", {"enabled", "provider", "lexicon_dir"});
    l.boolean("enabled", c.language_sentiment.enabled);
    c.language_sentiment.provider = read_provider(l, "provider", c.language_sentiment.provider, {"lexicon", "mock"});
    l.string("lexicon_dir", c.language_sentiment.lexicon_dir);
  }
  if (r.has("context")) {
    ObjectReader x(r.at("context"), "context", {"enabled", "title_salt", "email_model"});
    x.boolean("enabled", c.context.enabled);
    x.string("title_salt", c.context.title_salt);
    x.string("email_model", c.context.email_model);
  }
  if (r.has("store")) {
    ObjectReader s(r.at("store"), "store", {"path", "max_bytes", "sync_every_row", "http"});
    s.string("path", c.store.path);
    s.integer("max_bytes", c.store.max_bytes, 0, kMaxInt);
    s.boolean("sync_every_row", c.store.sync_every_row);
    if (s.has("http")) c.store.http = read_endpoint(s.at("http"), "store.http");
    if (c.store.path.empty() && !c.store.http) throw ValidationError("store.path", "required without store.http");
  }
  if (r.has("bus")) {
    ObjectReader b(r.at("bus"), "bus", {"enabled", "host", "port", "token", "queue_limit", "topics"});
    b.boolean("enabled", c.bus.enabled);
    b.string("host", c.bus.host);
    b.integer("port", c.bus.port, 0, 65535);
    b.string("token", c.bus.token);
    b.integer("queue_limit", c.bus.queue_limit, 1, 1 << 24);
    if (b.has("topics")) {
      const auto& topics = b.at("topics");
      if (!topics.is_array()) throw ValidationError("bus.topics", "must be a list of topic patterns");
      c.bus.topics.clear();
      for (std::size_t i = 0; i < topics.size(); ++i) {
        const std::string key = "bus.topics[" + std::to_string(i) + "]";
        if (!topics[i].is_string()) throw ValidationError(key, "must be a string");
        const auto pattern = topics[i].get<std::string>();
        if (!sinks::pattern_resolves(pattern)) throw ValidationError(key, "no registered topic matches '" + pattern + "'");
        c.bus.topics.push_back(pattern);
      }
    }
  }

  // streams a component consumes must be produced by an enabled component
  if (c.physiology.enabled && !c.vision.enabled)
    throw ValidationError("physiology.enabled", "needs vision (tracked frames)");
  if (c.language_sentiment.enabled && (!c.speech.enabled || c.speech.stt.kind == "none"))
    throw ValidationError("language_sentiment.enabled", "needs speech with a transcription provider");
  if (!c.replay.empty() && c.ingest) throw ValidationError("ingest", "cannot be combined with replay");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

ordered_json to_json(const PipelineConfig& c) {
  ordered_json j;
  j["replay"] = c.replay;
  j["replay_speed"] = c.replay_speed;
  if (c.ingest) j["ingest"] = {{"host", c.ingest->host}, {"port", c.ingest->port}};
  j["consent"] = c.consent;
  j["consent_record"] = c.consent_record;
  j["video"] = {{"fps", c.video_fps}};
  j["audio"] = {{"sample_rate", c.audio_sample_rate}};
  j["aggregation"] = {{"window_ms", c.window_ms}};

  ordered_json v;
  v["enabled"] = c.vision.enabled;
  v["detector"] = provider_json(c.vision.detector);
  v["expression"] = provider_json(c.vision.expression);
  v["embedding"] = provider_json(c.vision.embedding);
  v["pose"] = provider_json(c.vision.pose);
  v["gallery"] = c.vision.gallery;
  v["identity_threshold"] = c.vision.identity_threshold;
  v["distance_scale"] = c.vision.distance_scale;
  v["max_gap"] = c.vision.max_gap;
  v["expression_every_n_frames"] = c.vision.expression_every_n_frames;
  v["deadline_ms"] = c.vision.deadline_ms;
  j["vision"] = std::move(v);

  j["physiology"] = {{"enabled", c.physiology.enabled}, {"respiration", c.physiology.respiration}};

  ordered_json s;
  s["enabled"] = c.speech.enabled;
  s["stt"] = provider_json(c.speech.stt);
  s["valence"] = provider_json(c.speech.valence);
  s["vad_margin_db"] = c.speech.vad_margin_db;
  j["speech"] = std::move(s);

  ordered_json l;
  l["enabled"] = c.language_sentiment.enabled;
  l["provider"] = provider_json(c.language_sentiment.provider);
  l["lexicon_dir"] = c.language_sentiment.lexicon_dir;
  j["language_sentiment"] = std::move(l);

  ordered_json x;
  x["enabled"] = c.context.enabled;
  x["title_salt"] = c.context.title_salt;
  x["email_model"] = c.context.email_model;
  j["context"] = std::move(x);

  ordered_json st;
  st["path"] = c.store.path;
  st["max_bytes"] = c.store.max_bytes;
  st["sync_every_row"] = c.store.sync_every_row;
  if (c.store.http) st["http"] = endpoint_json(*c.store.http);
  j["store"] = std::move(st);

  ordered_json b;
  b["enabled"] = c.bus.enabled;
  b["host"] = c.bus.host;
  b["port"] = c.bus.port;
  b["token"] = c.bus.token;
  b["queue_limit"] = c.bus.queue_limit;
  b["topics"] = c.bus.topics;
  j["bus"] = std::move(b);
  return j;
}

void resolve_paths(PipelineConfig& c, const std::filesystem::path& base) {
  auto fix = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  fix(c.replay);
  fix(c.consent_record);
  fix(c.vision.gallery);
  fix(c.language_sentiment.lexicon_dir);
  fix(c.context.email_model);
  fix(c.store.path);
}

const std::vector<TokenOverride>& token_overrides() {
  static const std::vector<TokenOverride> list{
      {"AFFECT_BUS_TOKEN", [](PipelineConfig& c) { return &c.bus.token; }},
      {"AFFECT_DETECTOR_TOKEN", [](PipelineConfig& c) { return &c.vision.detector.endpoint.token; }},
      {"AFFECT_STT_TOKEN", [](PipelineConfig& c) { return &c.speech.stt.endpoint.token; }},
      {"AFFECT_STORE_TOKEN", [](PipelineConfig& c) { return c.store.http ? &c.store.http->token : nullptr; }},
  };
  return list;
}

void apply_env_overrides(PipelineConfig& config,
                         const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  for (const auto& o : token_overrides())
    if (auto v = getenv(o.variable))
      if (auto* token = o.target(config)) *token = *v;
}

void apply_env_overrides(PipelineConfig& config) {
  apply_env_overrides(config, [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  });
}

}  // namespace affect::app
