#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "affect/app/config.hpp"
#include "affect/app/render.hpp"
#include "affect/app/session.hpp"
#include "affect/app/synth.hpp"
#include "affect/app/trace.hpp"
#include "affect/app/train.hpp"
#include "doctest.h"

extern char** environ;

using namespace affect;
using namespace affect::app;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "affect_app_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path write_trace(const fs::path& dir, double seconds, std::uint64_t seed = 1) {
  SynthOptions o;
  o.seconds = seconds;
  o.seed = seed;
  if (seconds < o.gap_end) o.gap_begin = o.gap_end = seconds;
  const auto path = dir / "trace.ndjson";
  std::ofstream out(path);
  write_synthetic_trace(out, o);
  return path;
}

PipelineConfig replay_config(const fs::path& trace, const fs::path& log) {
  PipelineConfig c;
  c.replay = trace.string();
  c.store.path = log.string();
  return c;
}

ValidationError validation_error(const std::string& doc) {
  try {
    parse_config(json::parse(doc));
  } catch (const ValidationError& e) {
    return e;
  }
  FAIL("no ValidationError for " << doc);
  return ValidationError("", "");
}

}  // namespace

// --- config ------------------------------------------------------------------

TEST_CASE("minimal config gets the defaults") {
  const auto c = parse_config(json::parse(R"({"replay":"trace.ndjson"})"));
  CHECK(c.replay == "trace.ndjson");
  CHECK(c.window_ms == 1000);
  CHECK(c.video_fps == 15.0);
  CHECK(c.audio_sample_rate == 16000);
  CHECK(c.vision.enabled);
  CHECK(c.vision.detector.kind == "mock");
  CHECK(c.bus.queue_limit == 1024);
  CHECK(!c.bus.enabled);
  CHECK(!c.live());
}

TEST_CASE("unknown and malformed keys name the key") {
  CHECK(validation_error(R"({"replay":"t","fps_video":30})").key() == "fps_video");
  CHECK(validation_error(R"({"vision":{"fps":30}})").key() == "vision.fps");
  CHECK(validation_error(R"({"vision":{"detector":{"kind":"mock","colour":1}}})").key() == "vision.detector.colour");
  CHECK(validation_error(R"({"vision":{"max_gap":"eight"}})").key() == "vision.max_gap");
  CHECK(validation_error(R"({"video":{"fps":0}})").key() == "video.fps");
  CHECK(validation_error(R"({"audio":{"sample_rate":44100}})").key() == "audio.sample_rate");
  CHECK(validation_error(R"({"bus":{"topics":["face.*","nope"]}})").key() == "bus.topics[1]");
  CHECK(validation_error(R"({"vision":{"detector":{"kind":"http"}}})").key() == "vision.detector.url");
  CHECK(validation_error(R"({"vision":{"enabled":false}})").key() == "physiology.enabled");
  CHECK(validation_error(R"({"speech":{"stt":{"kind":"none"}}})").key() == "language_sentiment.enabled");
  CHECK(validation_error(R"([1,2])").key() == "<root>");
}

TEST_CASE("config file errors") {
  const auto dir = fresh_dir("config_file");
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ParseError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ParseError);
  std::ofstream(dir / "ok.json") << R"({"replay":"t.ndjson","store":{"path":"logs/s.ndjson"}})";
  auto c = load_config(dir / "ok.json");
  resolve_paths(c, dir);
  CHECK(c.replay == (dir / "t.ndjson").string());
  CHECK(c.store.path == (dir / "logs/s.ndjson").string());
}

TEST_CASE("property: load, serialize, load is the identity") {
  std::mt19937 rng(5);
  auto pick = [&](std::initializer_list<const char*> xs) { return std::string(*(xs.begin() + rng() % xs.size())); };
  for (int i = 0; i < 200; ++i) {
    PipelineConfig c;
    if (rng() % 2) c.replay = "trace" + std::to_string(rng() % 100) + ".ndjson";
    else c.ingest = IngestConfig{"127.0.0.1", std::uint16_t(rng() % 65536)};
    c.replay_speed = double(rng() % 400) / 8.0;
    c.consent = rng() % 2;
    c.video_fps = 1.0 + double(rng() % 600) / 4.0;
    c.window_ms = 1 + rng() % 5000;
    c.vision.detector.kind = pick({"mock", "http"});
    if (c.vision.detector.kind == "http")
      c.vision.detector.endpoint = {"http://10.0.0.1:" + std::to_string(rng() % 9000) + "/detect", "tok",
                                    std::chrono::milliseconds(1 + rng() % 9000)};
    c.vision.expression.kind = pick({"mock", "none"});
    c.vision.max_gap = int(rng() % 30);
    c.vision.distance_scale = double(rng() % 100) / 16.0;
    c.physiology.respiration = rng() % 2;
    c.speech.stt.kind = pick({"mock", "http"});
    if (c.speech.stt.kind == "http") c.speech.stt.endpoint = {"https://stt.example/v1", "", std::chrono::milliseconds(750)};
    c.speech.vad_margin_db = double(rng() % 200) / 10.0;
    c.language_sentiment.provider.kind = pick({"lexicon", "mock"});
    c.context.title_salt = std::to_string(rng());
    c.store.max_bytes = rng() % 2 ? 0 : rng();
    if (rng() % 3 == 0) c.store.http = HttpEndpoint{"http://store.local/rows", "s3cret", std::chrono::milliseconds(5000)};
    c.bus.enabled = rng() % 2;
    c.bus.port = std::uint16_t(rng() % 65536);
    c.bus.topics = {pick({"*", "face.*", "audio.vad", "metrics.row", "context.*"})};
    const auto text = to_json(c).dump();
    const auto back = parse_config(json::parse(text));
    CHECK(back == c);
    CHECK(to_json(back).dump() == text);
  }
}

TEST_CASE("environment overrides only replace tokens") {
  PipelineConfig c = parse_config(json::parse(R"({"replay":"t","store":{"path":"x","http":{"url":"http://h/rows"}}})"));
  const PipelineConfig before = c;
  std::map<std::string, std::string> env{{"AFFECT_BUS_TOKEN", "bus-secret"},
                                         {"AFFECT_STORE_TOKEN", "store-secret"},
                                         {"AFFECT_REPLAY", "/elsewhere"},
                                         {"AFFECT_WINDOW_MS", "5"}};
  apply_env_overrides(c, [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    return it == env.end() ? std::nullopt : std::optional<std::string>(it->second);
  });
  CHECK(c.bus.token == "bus-secret");
  CHECK(c.store.http->token == "store-secret");
  c.bus.token = before.bus.token;
  c.store.http->token = before.store.http->token;
  CHECK(c == before);
  for (const auto& o : token_overrides()) CHECK(o.variable.ends_with("_TOKEN"));
}

// --- render ------------------------------------------------------------------

TEST_CASE("render_metrics of an empty row") {
  sinks::MetricsRow row;
  row.window_start = from_micros(3000000);
  const auto text = render_metrics(row);
  const auto lines = lines_of(text);
  CHECK(lines.front() == "== window 3.000 s ==");
  std::size_t absent = 0;
  for (const auto& l : lines)
    if (l.find(std::string(kAbsent)) != std::string::npos) ++absent;
  // HR, RR, EXP, VAD, pitch, energy, transcript, sentiment, valence, apps, email
  CHECK(absent == 11);
  CHECK(text.find("keyboard    no") != std::string::npos);
}

TEST_CASE("render_metrics formats heart rate") {
  sinks::MetricsRow row;
  sinks::FaceRow f;
  f.id = 4;
  f.bbox = {1, 2, 30, 40};
  f.hr_bpm = 72.0;
  row.faces.push_back(f);
  row.face_count = 1;
  const auto text = render_metrics(row);
  CHECK(text.find("HR  72.0 bpm") != std::string::npos);
  CHECK(text.find("RR  " + std::string(kAbsent)) != std::string::npos);
}

TEST_CASE("property: rendered rows never show forbidden fields") {
  std::mt19937 rng(12);
  for (int i = 0; i < 100; ++i) {
    sinks::MetricsRow row;
    row.window_start = from_micros(std::int64_t(rng() % 100000) * 1000000);
    for (int k = 0; k < int(rng() % 3); ++k) {
      sinks::FaceRow f;
      f.id = rng() % 9;
      if (rng() % 2) f.hr_bpm = 40.0 + rng() % 100;
      if (rng() % 2) f.expression = std::array<double, 8>{0.5, 0.5, 0, 0, 0, 0, 0, 0};
      row.faces.push_back(f);
    }
    if (rng() % 2) row.transcript = "status update";
    if (rng() % 2) row.app_events.push_back({row.window_start, {"mail", "0123abcd", {0, 0, 10, 10}, context::AppEventKind::start}});
    if (rng() % 2) row.email_scores = {0.5};
    const auto text = render_metrics(row);
    for (const auto& key : sinks::forbidden_keys()) CHECK(text.find(key) == std::string::npos);
    CHECK(text.find("0123abcd") == std::string::npos);
  }
}

// --- trace ---------------------------------------------------------------------

TEST_CASE("trace records round trip") {
  vision::VideoFrame frame(4, 3);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) frame.pixels[i] = std::uint8_t(i * 7);
  const auto v = parse_trace_record(trace_line(from_micros(66667), frame));
  CHECK(v.time == from_micros(66667));
  CHECK(std::get<vision::VideoFrame>(v.payload).pixels == frame.pixels);

  audio::AudioBuffer buffer;
  buffer.samples = Eigen::VectorXf::LinSpaced(320, -0.5f, 0.5f);
  const auto a = parse_trace_record(trace_line(from_micros(20000), buffer));
  const auto& back = std::get<audio::AudioBuffer>(a.payload);
  CHECK(back.sample_rate == 16000);
  CHECK((back.samples - buffer.samples).cwiseAbs().maxCoeff() < 1.0f / 16000.0f);

  const auto k = parse_trace_record(R"({"t":5,"kind":"key"})");
  CHECK(std::get<context::RawInputEvent>(k.payload).device == context::InputDevice::keyboard);
  const auto app = parse_trace_record(R"({"t":9,"kind":"app","app_name":"mail","event":"start","window_title":"Salary"})");
  CHECK(std::get<context::AppEvent>(app.payload).window_title_hash == context::hash_title("Salary", ""));

  CHECK_THROWS_AS(parse_trace_record(R"({"t":1,"kind":"video","width":2,"height":2,"rgb_b64":"AAAA"})"), ParseError);
  CHECK_THROWS_AS(parse_trace_record(R"({"t":1,"kind":"hologram"})"), ParseError);
  CHECK_THROWS_AS(parse_trace_record("[]"), ParseError);
}

TEST_CASE("trace files must be time ordered") {
  const auto dir = fresh_dir("order");
  std::ofstream(dir / "t.ndjson") << R"({"t":10,"kind":"key"})" << "\n\n"
                                  << R"({"t":10,"kind":"mouse"})" << "\n"
                                  << R"({"t":9,"kind":"key"})" << "\n";
  TraceFileReader reader(dir / "t.ndjson");
  Pipeline p;  // only to obtain a source context
  auto src = p.add_source("probe");
  std::string error;
  src.body([&](const SourceContext& ctx) {
    CHECK(reader.next(ctx));
    CHECK(reader.next(ctx));
    try {
      reader.next(ctx);
    } catch (const NonMonotonicTimestamp& e) {
      error = e.what();
    }
  });
  p.run();
  CHECK(error.find("line 4") != std::string::npos);
}

TEST_CASE("synthetic traces are reproducible") {
  std::ostringstream a, b, c;
  SynthOptions o;
  o.seconds = 6;
  write_synthetic_trace(a, o);
  write_synthetic_trace(b, o);
  o.seed = 2;
  write_synthetic_trace(c, o);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
  // every line parses and time never decreases
  std::int64_t last = -1;
  for (const auto& l : lines_of(a.str())) {
    const auto r = parse_trace_record(l);
    CHECK(to_micros(r.time) >= last);
    last = to_micros(r.time);
  }
}

// --- session -------------------------------------------------------------------

TEST_CASE("replay sessions write one row per window, deterministically") {
  const auto dir = fresh_dir("replay");
  const auto trace = write_trace(dir, 12);
  Session one(replay_config(trace, dir / "a.ndjson"));
  const auto r1 = one.run();
  Session two(replay_config(trace, dir / "b.ndjson"));
  two.run();
  CHECK(r1.rows == 12);
  CHECK(!r1.stopped);
  CHECK(read_file(dir / "a.ndjson") == read_file(dir / "b.ndjson"));
  CHECK(lines_of(read_file(dir / "a.ndjson")).size() == 12);
  CHECK_THROWS_AS(Session(replay_config(trace, dir / "a.ndjson")), SessionLogExists);
}

TEST_CASE("print-metrics renders every row") {
  const auto dir = fresh_dir("print");
  const auto trace = write_trace(dir, 3);
  std::ostringstream console;
  SessionOptions opts;
  opts.metrics_out = &console;
  Session s(replay_config(trace, dir / "s.ndjson"), opts);
  s.run();
  std::size_t headers = 0;
  for (const auto& l : lines_of(console.str())) headers += l.starts_with("== window ");
  CHECK(headers == 3);
}

TEST_CASE("a malformed trace fails the session") {
  const auto dir = fresh_dir("malformed");
  std::ofstream(dir / "t.ndjson") << R"({"t":1,"kind":"key"})" << "\n" << "{oops\n";
  Session s(replay_config(dir / "t.ndjson", dir / "s.ndjson"));
  CHECK_THROWS_AS(s.run(), ComponentFailure);
}

TEST_CASE("live capture needs consent, replay does not") {
  const auto dir = fresh_dir("consent");
  PipelineConfig c;
  c.ingest = IngestConfig{"127.0.0.1", 0};
  c.consent_record = (dir / "consent.json").string();
  c.store.path = (dir / "s.ndjson").string();
  CHECK_THROWS_AS(check_consent(c, false), ConsentRequired);
  CHECK(json::parse(read_file(dir / "consent.json")).at("consent") == false);
  CHECK_THROWS_AS(Session(c, {}), ConsentRequired);
  check_consent(c, true);
  CHECK(json::parse(read_file(dir / "consent.json")).at("consent") == true);
  check_consent(c, false);  // acknowledged earlier

  PipelineConfig replay = replay_config(dir / "none.ndjson", dir / "r.ndjson");
  replay.consent_record = (dir / "other.json").string();
  check_consent(replay, false);
  CHECK(!fs::exists(dir / "other.json"));
}

TEST_CASE("live ingestion over TCP") {
  const auto dir = fresh_dir("ingest");
  const auto trace = write_trace(dir, 4);
  PipelineConfig c;
  c.ingest = IngestConfig{"127.0.0.1", 0};
  c.consent = true;
  c.consent_record = (dir / "consent.json").string();
  c.store.path = (dir / "live.ndjson").string();
  Session live(c);
  REQUIRE(live.ingest_port());
  std::thread producer([port = *live.ingest_port(), text = read_file(trace)] {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    for (std::size_t off = 0; off < text.size();) {
      const auto n = ::send(fd, text.data() + off, std::min<std::size_t>(4096, text.size() - off), MSG_NOSIGNAL);
      REQUIRE(n > 0);
      off += std::size_t(n);
    }
    ::close(fd);
  });
  const auto result = live.run();
  producer.join();
  CHECK(result.rows == 4);
  for (const auto& l : lines_of(read_file(dir / "live.ndjson"))) CHECK_NOTHROW(sinks::row_from_json(sinks::Json::parse(l)));
}

TEST_CASE("a stop request drains cleanly") {
  const auto dir = fresh_dir("stop");
  const auto trace = write_trace(dir, 30);
  auto c = replay_config(trace, dir / "s.ndjson");
  c.replay_speed = 1.0;
  Session s(c);
  std::thread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    s.request_stop();
  });
  const auto result = s.run();
  stopper.join();
  CHECK(result.stopped);
  CHECK(result.rows >= 1);
  CHECK(result.rows < 30);
  const auto text = read_file(dir / "s.ndjson");
  CHECK(text.ends_with("\n"));
  CHECK(lines_of(text).size() == result.rows);
  for (const auto& l : lines_of(text)) CHECK_NOTHROW(sinks::Json::parse(l));
}

// --- trainer -----------------------------------------------------------------------

TEST_CASE("corpus loading and training") {
  const auto dir = fresh_dir("train");
  std::ofstream(dir / "c.ndjson") << R"({"text":"good movie","label":"pos"})" << "\n"
                                  << R"({"text":"good film","label":1})" << "\n"
                                  << R"({"text":"bad movie","label":"neg"})" << "\n"
                                  << R"({"text":"bad film","label":0})" << "\n";
  const auto corpus = load_corpus(dir / "c.ndjson");
  REQUIRE(corpus.size() == 4);
  CHECK(corpus[1].label == 1);
  CHECK(corpus[3].label == 0);
  const auto s = train_sentiment(corpus);
  CHECK(s.training_accuracy == 1.0);
  CHECK(s.result.model.score("good movie") > 0.9);

  std::ofstream(dir / "bad.ndjson") << R"({"text":"x","label":"maybe"})" << "\n";
  CHECK_THROWS_AS(load_corpus(dir / "bad.ndjson"), ParseError);
}

// --- command line ------------------------------------------------------------------

namespace {

struct Child {
  pid_t pid = -1;
  int wait() const {
    int status = 0;
    ::waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
};

Child spawn(std::vector<std::string> args, const fs::path& cwd) {
  args.insert(args.begin(), AFFECT_CLI);
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, (cwd / "stdout.txt").c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, 2, (cwd / "stderr.txt").c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  Child c;
  REQUIRE(posix_spawn(&c.pid, AFFECT_CLI, &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);
  return c;
}

}  // namespace

TEST_CASE("affectd exit codes") {
  const auto dir = fresh_dir("cli");
  const auto trace = write_trace(dir, 3);
  std::ofstream(dir / "ok.json") << json{{"replay", trace.string()}, {"store", {{"path", (dir / "s.ndjson").string()}}}}.dump();
  CHECK(spawn({"run", "--config", (dir / "ok.json").string()}, dir).wait() == 0);
  CHECK(lines_of(read_file(dir / "s.ndjson")).size() == 3);

  std::ofstream(dir / "unknown.json") << R"({"replay":"t.ndjson","fps_video":30})";
  CHECK(spawn({"run", "--config", (dir / "unknown.json").string()}, dir).wait() == 2);
  CHECK(read_file(dir / "stderr.txt").find("fps_video") != std::string::npos);

  std::ofstream(dir / "bad_trace.ndjson") << "{oops\n";
  std::ofstream(dir / "fail.json") << json{{"replay", (dir / "bad_trace.ndjson").string()},
                                           {"store", {{"path", (dir / "f.ndjson").string()}}}}.dump();
  CHECK(spawn({"run", "--config", (dir / "fail.json").string()}, dir).wait() == 1);

  std::ofstream(dir / "live.json") << json{{"ingest", {{"port", 0}}},
                                           {"consent_record", (dir / "consent.json").string()},
                                           {"store", {{"path", (dir / "l.ndjson").string()}}}}.dump();
  CHECK(spawn({"run", "--config", (dir / "live.json").string()}, dir).wait() == 3);

  std::ofstream(dir / "corpus.ndjson") << R"({"text":"good movie","label":"pos"})" << "\n"
                                       << R"({"text":"good film","label":"pos"})" << "\n"
                                       << R"({"text":"bad movie","label":"neg"})" << "\n"
                                       << R"({"text":"bad film","label":"neg"})" << "\n";
  CHECK(spawn({"train-sentiment", "--corpus", (dir / "corpus.ndjson").string(), "--out", (dir / "m.json").string()}, dir)
            .wait() == 0);
  const auto model = text::SentimentModel::from_json(json::parse(read_file(dir / "m.json")));
  CHECK(model.score("good film") > 0.9);
}

TEST_CASE("affectd drains on SIGINT") {
  const auto dir = fresh_dir("sigint");
  const auto trace = write_trace(dir, 30);
  std::ofstream(dir / "c.json") << json{{"replay", trace.string()},
                                        {"replay_speed", 1.0},
                                        {"store", {{"path", (dir / "s.ndjson").string()}}}}.dump();
  const auto child = spawn({"run", "--config", (dir / "c.json").string()}, dir);
  std::this_thread::sleep_for(std::chrono::milliseconds(2000));
  ::kill(child.pid, SIGINT);
  CHECK(child.wait() == 0);
  const auto text = read_file(dir / "s.ndjson");
  const auto rows = lines_of(text);
  CHECK(!rows.empty());
  CHECK(rows.size() < 30);
  CHECK(text.ends_with("\n"));
  for (const auto& l : rows) CHECK_NOTHROW(sinks::Json::parse(l));
}
