#include "affect/app/session.hpp"

#include <filesystem>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "affect/app/render.hpp"
#include "affect/app/trace.hpp"
#include "affect/audio/components.hpp"
#include "affect/physiology/components.hpp"
#include "affect/sinks/metrics.hpp"
#include "affect/sinks/store.hpp"
#include "affect/text/lexicon.hpp"
#include "affect/vision/components.hpp"

namespace affect::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot read ") + what + " " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

vision::Gallery load_gallery(const std::string& path) {
  const json doc = read_json_file(path, "gallery");
  if (!doc.is_array()) throw ParseError(path + ": gallery must be a list");
  vision::Gallery gallery;
  try {
    for (const auto& e : doc) {
      const auto values = e.at("embedding").get<std::vector<double>>();
      const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
      gallery.push_back({e.at("id").get<std::uint64_t>(), vision::normalized_embedding(v)});
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return gallery;
}

context::EventLogOptions event_options(const ContextConfig& c) {
  context::EventLogOptions o;
  o.title_salt = c.title_salt;
  if (!c.email_model.empty())
    o.email_model = std::make_shared<const text::SentimentModel>(
        text::SentimentModel::from_json(read_json_file(c.email_model, "email model")));
  return o;
}

std::string utc_now() { return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr))); }

void write_consent_record(const std::string& path, bool acknowledged) {
  json j;
  j["consent"] = acknowledged;
  j["recorded_at"] = utc_now();
  j["scope"] = {"video", "audio", "desktop context"};
  j["retention"] = "aggregated metrics only; raw audio, video and text are never stored";
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("cannot write consent record " + path);
}

bool recorded_consent(const std::string& path) {
  std::ifstream in(path);
  if (!in) return false;
  const json j = json::parse(in, nullptr, false);
  return !j.is_discarded() && j.is_object() && j.value("consent", false) == true;
}

}  // namespace

void check_consent(const PipelineConfig& config, bool consent_flag) {
  if (!config.live()) return;
  const bool prior = recorded_consent(config.consent_record);
  if (consent_flag || config.consent) {
    if (!prior) write_consent_record(config.consent_record, true);
    return;
  }
  if (prior) return;
  if (!fs::exists(config.consent_record)) write_consent_record(config.consent_record, false);
  throw ConsentRequired("live capture needs explicit consent: pass --consent or set \"consent\": true (record at " +
                        config.consent_record + ")");
}

Session::Session(PipelineConfig config, SessionOptions options)
    : config_(std::move(config)), options_(options), pipeline_(std::make_unique<Pipeline>()),
      rows_(std::make_shared<std::uint64_t>(0)) {
  check_consent(config_, options_.consent);
  auto& p = *pipeline_;
  const bool replay = !config_.replay.empty();
  if (!replay && !config_.ingest) throw ValidationError("replay", "no source: set replay or ingest");

  // Replay never loses messages, so its output depends on the input only.
  const SubscriptionOptions delivery = replay ? SubscriptionOptions{64, DeliveryPolicy::block} : SubscriptionOptions{};
  const SubscriptionOptions lossless{256, DeliveryPolicy::block};
  const auto deadline = replay ? std::chrono::milliseconds(std::chrono::hours(1))
                               : std::chrono::milliseconds(config_.vision.deadline_ms);

  const auto ctx_options = event_options(config_.context);
  std::shared_ptr<TraceReader> reader;
  if (replay) {
    reader = std::make_shared<TraceFileReader>(config_.replay, ctx_options);
  } else {
    auto server = std::make_shared<TraceIngestServer>(config_.ingest->host, config_.ingest->port, ctx_options);
    ingest_port_ = server->port();
    reader = server;
  }
  const auto trace = add_trace_source(p, reader, {replay ? config_.replay_speed : 0.0});

  sinks::AggregatorInputs in;
  std::vector<std::function<void(sinks::BusPublisher&)>> taps;
  auto tap = [this, &taps, delivery](auto stream) {
    if (!stream.valid()) return;
    const auto& topics = config_.bus.topics;
    const auto& name = stream.descriptor().name;
    if (std::none_of(topics.begin(), topics.end(), [&](const auto& t) { return sinks::topic_matches(t, name); })) return;
    taps.push_back([stream, delivery](sinks::BusPublisher& pub) { pub.tap(stream, delivery); });
  };

  if (config_.vision.enabled) {
    const auto& v = config_.vision;
    vision::VisionProviders providers;
    providers.detector = vision::make_face_detector(v.detector);
    if (v.expression.kind != "none") providers.expression = vision::make_expression_classifier(v.expression);
    if (v.embedding.kind != "none") providers.embedding = vision::make_embedding_provider(v.embedding);
    if (v.pose.kind != "none") providers.pose = vision::make_pose_estimator(v.pose);
    vision::VisionOptions opts;
    opts.tracker.distance_scale = v.distance_scale;
    opts.tracker.max_gap = v.max_gap;
    opts.deadline = deadline;
    opts.expression_every_n_frames = v.expression_every_n_frames;
    opts.identity_threshold = v.identity_threshold;
    if (!v.gallery.empty()) opts.gallery = load_gallery(v.gallery);
    const auto vs = vision::add_vision(p, trace.frames, providers, opts, delivery);
    in.tracks = vs.tracks;
    in.expressions = vs.expressions;
    tap(vs.tracks);
    tap(vs.expressions);
    tap(vs.poses);
    if (config_.physiology.enabled) {
      physiology::PhysioOptions po;
      po.frame_rate = config_.video_fps;
      po.respiration = config_.physiology.respiration;
      const auto ps = physiology::add_physiology(p, vs.tracked_frames, po, delivery);
      in.hr = ps.hr;
      in.resp = ps.resp;
      tap(ps.hr);
      tap(ps.resp);
    }
  }

  if (config_.speech.enabled) {
    const auto& s = config_.speech;
    audio::AudioProviders providers;
    if (s.stt.kind != "none") providers.speech = audio::make_speech_to_text(s.stt);
    if (s.valence.kind != "none") providers.valence = audio::make_valence_classifier(s.valence);
    audio::AudioOptions opts;
    opts.vad.margin_db = s.vad_margin_db;
    opts.valence_deadline = deadline;
    const auto as = audio::add_audio(p, trace.audio, providers, opts, delivery);
    in.vad = as.vad;
    in.prosody = as.prosody;
    in.transcripts = as.transcripts;
    in.valence = as.valence;
    tap(as.vad);
    tap(as.prosody);
    tap(as.transcripts);
    tap(as.valence);
    if (config_.language_sentiment.enabled) {
      const auto& l = config_.language_sentiment;
      in.sentiment = text::add_language_sentiment(p, as.transcripts, text::make_language_sentiment(l.provider, l.lexicon_dir),
                                                  delivery);
      tap(in.sentiment);
    }
  }

  const Duration window = std::chrono::duration_cast<Duration>(std::chrono::milliseconds(config_.window_ms));
  if (config_.context.enabled) {
    in.apps = trace.context.apps;
    in.calendar = trace.context.calendar;
    in.email = trace.context.email;
    in.input = context::add_input_summary(p, trace.context.raw_input, window, delivery);
    tap(in.apps);
    tap(in.calendar);
    tap(in.email);
    tap(in.input);
  }

  sinks::AggregatorOptions agg;
  agg.window = window;
  const auto rows = sinks::add_aggregator(p, in, agg, lossless);
  tap(rows);

  std::shared_ptr<sinks::RowStore> store;
  if (config_.store.http) {
    store = std::make_shared<sinks::HttpRowStore>(*config_.store.http);
  } else {
    if (fs::exists(config_.store.path) && fs::file_size(config_.store.path) > 0)
      throw SessionLogExists("session log " + config_.store.path + " already holds rows; choose a new path");
    const fs::path log(config_.store.path);
    if (log.has_parent_path()) fs::create_directories(log.parent_path());
    sinks::NdjsonStoreOptions so;
    if (config_.store.max_bytes) so.max_bytes = config_.store.max_bytes;
    so.sync_every_row = config_.store.sync_every_row;
    store = std::make_shared<sinks::NdjsonRowStore>(log, so);
  }
  auto writer = p.add_component("row_store");
  writer.input(rows, [store, count = rows_](const Message<sinks::MetricsRow>& m) {
    store->append(m.payload());
    ++*count;
  }, lossless);
  writer.on_close([store] { store->flush(); });

  if (options_.metrics_out) {
    auto console = p.add_component("console");
    console.input(rows, [out = options_.metrics_out](const Message<sinks::MetricsRow>& m) {
      *out << render_metrics(m.payload()) << std::flush;
    }, lossless);
  }

  if (config_.bus.enabled) {
    sinks::BusOptions bo;
    bo.host = config_.bus.host;
    bo.port = config_.bus.port;
    bo.token = config_.bus.token;
    bo.queue_limit = config_.bus.queue_limit;
    bus_ = std::make_shared<sinks::BusServer>(bo);
    sinks::BusPublisher publisher(p, bus_);
    for (const auto& t : taps) t(publisher);
    bus_->start();
  }
}

Session::~Session() {
  if (bus_) bus_->stop(std::chrono::milliseconds(0));
}

std::optional<std::uint16_t> Session::bus_port() const {
  return bus_ ? std::optional<std::uint16_t>(bus_->port()) : std::nullopt;
}

std::optional<std::uint16_t> Session::ingest_port() const { return ingest_port_; }

SessionResult Session::run() {
  SessionResult result;
  try {
    result.report = pipeline_->run();
  } catch (...) {
    if (bus_) bus_->stop();
    throw;
  }
  if (bus_) bus_->stop();
  result.rows = *rows_;
  result.stopped = stop_requested_;
  return result;
}

void Session::request_stop() {
  stop_requested_ = true;
  pipeline_->request_stop();
}

}  // namespace affect::app
