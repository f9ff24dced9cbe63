#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "affect/audio/components.hpp"
#include "affect/core/base64.hpp"
#include "doctest.h"
#include "httplib.h"

using namespace affect;
using namespace affect::audio;
constexpr double kPi = std::numbers::pi;

namespace {

Eigen::VectorXf tone(int n, double hz, double amp = 1.0, int offset = 0) {
  Eigen::VectorXf x(n);
  for (int i = 0; i < n; ++i) x(i) = float(amp * std::sin(2 * kPi * hz * (i + offset) / kSampleRate));
  return x;
}

Eigen::VectorXf noise(int n, double sd, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, float(sd));
  Eigen::VectorXf x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

// Independent restatement of the detector rule, energies in long double.
std::vector<bool> vad_oracle(const Eigen::VectorXf& signal, double margin = 6.0, int hangover = 13,
                             double alpha = 0.05) {
  std::vector<bool> flags;
  long double floor_db = 0;
  int hang = 0;
  for (Eigen::Index s = 0; s + kVadFrame <= signal.size(); s += kVadFrame) {
    long double acc = 0;
    for (int i = 0; i < kVadFrame; ++i) acc += (long double)signal(s + i) * signal(s + i);
    const long double e = 10 * std::log10(acc / kVadFrame + 1e-10L);
    if (s == 0) floor_db = e;
    if (e > floor_db + margin) {
      hang = hangover;
      flags.push_back(true);
    } else {
      floor_db = (1 - alpha) * floor_db + alpha * e;
      flags.push_back(hang > 0);
      if (hang > 0) --hang;
    }
  }
  return flags;
}

std::vector<bool> run_vad(const Eigen::VectorXf& signal, VadParams p = {}) {
  VoiceActivityDetector vad(p);
  std::vector<bool> flags;
  for (Eigen::Index s = 0; s + kVadFrame <= signal.size(); s += kVadFrame)
    flags.push_back(vad.update(std::span<const float>(signal.data() + s, kVadFrame), from_micros(s * 62)).active);
  return flags;
}

Eigen::VectorXf concat(std::initializer_list<Eigen::VectorXf> parts) {
  Eigen::Index n = 0;
  for (auto& p : parts) n += p.size();
  Eigen::VectorXf out(n);
  Eigen::Index at = 0;
  for (auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

double naive_autocorr(const Eigen::VectorXf& x, int lag) {
  double num = 0, den = 0;
  for (int i = 0; i < x.size(); ++i) den += double(x(i)) * x(i);
  for (int i = 0; i + lag < x.size(); ++i) num += double(x(i)) * x(i + lag);
  return num / den;
}

}  // namespace

TEST_CASE("VAD examples") {
  VoiceActivityDetector vad;
  std::vector<float> zeros(kVadFrame, 0.0f);
  CHECK_FALSE(vad.update(zeros, {}).active);
  std::vector<float> wrong(100, 0.0f);
  CHECK_THROWS_AS(vad.update(wrong, {}), BadFrameLength);

  // 1 s silence calibration, then a full-scale 300 Hz tone
  const Eigen::VectorXf sig = concat({noise(16000, 1e-3, 1), tone(3200, 300.0)});
  const auto flags = run_vad(sig);
  for (int i = 0; i < 50; ++i) CHECK_FALSE(flags[std::size_t(i)]);
  CHECK(flags[50]);
  CHECK(frame_energy_db(std::span<const float>(sig.data() + 16000, kVadFrame)) >
        frame_energy_db(std::span<const float>(sig.data(), kVadFrame)) + 6.0);
}

TEST_CASE("VAD hangover is exact after a burst") {
  const Eigen::VectorXf sig = concat({noise(16000, 1e-3, 2), tone(320 * 10, 300.0, 0.5), noise(320 * 40, 1e-3, 3)});
  const auto flags = run_vad(sig);
  // burst frames 50..59, hangover frames 60..72, inactive from 73
  for (int i = 50; i < 60; ++i) CHECK(flags[std::size_t(i)]);
  for (int i = 60; i < 73; ++i) CHECK(flags[std::size_t(i)]);
  for (int i = 73; i < 90; ++i) CHECK_FALSE(flags[std::size_t(i)]);
}

TEST_CASE("VAD matches the energy oracle on scripted traces") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::VectorXf> parts;
    parts.push_back(noise(3200, 1e-3, rng()));
    for (int k = 0; k < 12; ++k) {
      const int frames = 1 + int(rng() % 30);
      const double amp = std::pow(10.0, -0.1 * double(rng() % 40));
      if (rng() % 2) parts.push_back(tone(frames * kVadFrame, 100.0 + rng() % 300, amp));
      else parts.push_back(noise(frames * kVadFrame, 1e-3 * (1 + rng() % 3), rng()));
    }
    Eigen::Index n = 0;
    for (auto& p : parts) n += p.size();
    Eigen::VectorXf sig(n);
    Eigen::Index at = 0;
    for (auto& p : parts) sig.segment(at, p.size()) = p, at += p.size();
    CHECK(run_vad(sig) == vad_oracle(sig));
  }
}

TEST_CASE("property: VAD decision is monotone in frame energy for a fixed floor") {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    VoiceActivityDetector calibrated;
    const Eigen::VectorXf cal = noise(kVadFrame, 1e-3 * (1 + rng() % 10), rng());
    calibrated.update(std::span<const float>(cal.data(), kVadFrame), {});
    const double floor = *calibrated.noise_floor_db();
    const double e1 = floor + 6.0 - 0.5 - double(rng() % 20);
    const double e2 = floor + 6.0 + 0.5 + double(rng() % 20);
    auto frame_at = [](double db) {
      const double amp = std::sqrt(2.0 * (std::pow(10.0, db / 10.0) - 1e-10));
      return tone(kVadFrame, 250.0, amp);  // 250 Hz: whole cycles in 20 ms, exact mean square
    };
    const Eigen::VectorXf f1 = frame_at(e1), f2 = frame_at(e2);
    VoiceActivityDetector a = calibrated, b = calibrated;
    CHECK_FALSE(a.update(std::span<const float>(f1.data(), kVadFrame), {}).active);
    CHECK(b.update(std::span<const float>(f2.data(), kVadFrame), {}).active);
  }
}

namespace {

struct SegRun {
  std::vector<SpeechSegment> segments;
  SpeechSegmenter seg;
};

SegRun segment_flags(const std::vector<bool>& flags) {
  SegRun r;
  std::vector<float> frame(kVadFrame, 0.1f);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    auto out = r.seg.push(frame, {flags[i], from_micros(std::int64_t(i) * 20000)});
    r.segments.insert(r.segments.end(), out.begin(), out.end());
  }
  auto out = r.seg.finish();
  r.segments.insert(r.segments.end(), out.begin(), out.end());
  return r;
}

}  // namespace

TEST_CASE("segmenter examples") {
  auto one = segment_flags(std::vector<bool>(50, true));
  REQUIRE(one.segments.size() == 1);
  CHECK(one.segments[0].duration() == std::chrono::seconds(1));
  CHECK(one.segments[0].samples.size() == 16000);

  CHECK(segment_flags(std::vector<bool>(5, true)).segments.empty());

  auto long_run = segment_flags(std::vector<bool>(65 * 50, true));
  REQUIRE(long_run.segments.size() == 3);
  CHECK(long_run.segments[0].duration() == std::chrono::seconds(30));
  CHECK(long_run.segments[1].duration() == std::chrono::seconds(30));
  CHECK(long_run.segments[2].duration() == std::chrono::seconds(5));
  CHECK(long_run.segments[1].start_time == from_micros(30000000));
}

TEST_CASE("property: segmenter conservation and bounds") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<bool> flags;
    while (flags.size() < 5000) {
      const bool on = rng() % 2;
      const int len = on ? 1 + int(rng() % (trial % 10 == 0 ? 3000 : 80)) : 1 + int(rng() % 40);
      flags.insert(flags.end(), std::size_t(len), on);
    }
    auto r = segment_flags(flags);
    const auto active = Duration(std::count(flags.begin(), flags.end(), true) * 20000);
    Duration sum{0};
    for (const auto& s : r.segments) {
      sum += s.duration();
      CHECK(s.duration() >= std::chrono::milliseconds(200));
      CHECK(s.duration() <= std::chrono::seconds(30));
      CHECK(s.samples.size() == s.duration().count() * 16000 / 1000000);
    }
    CHECK(r.seg.active_duration() == active);
    CHECK(active == sum + r.seg.dropped_duration());
    CHECK(r.seg.emitted_duration() == sum);
  }
}

TEST_CASE("prosody: pitch and energy of sinusoids") {
  for (double f : {80.0, 120.0, 200.0, 320.0}) {
    const Eigen::VectorXf x = tone(kProsodyFrame, f);
    const auto p = extract_prosody(x, {});
    REQUIRE(p.pitch_hz.has_value());
    CHECK(std::abs(*p.pitch_hz - f) <= 2.0);
    // oracle: the naive autocorrelation peaks at the integer lag nearest the period
    const int period = int(std::lround(kSampleRate / f));
    int best = 40;
    for (int lag = 40; lag <= 267; ++lag)
      if (naive_autocorr(x, lag) > naive_autocorr(x, best) && naive_autocorr(x, lag) >= naive_autocorr(x, lag + 1) &&
          naive_autocorr(x, lag) > naive_autocorr(x, lag - 1))
        best = lag;
    CHECK(std::abs(best - period) <= 2);
  }
  CHECK(extract_prosody(tone(kProsodyFrame, 200.0), {}).energy_rms == doctest::Approx(0.70710678).epsilon(1e-3 / 0.7071));
  CHECK(std::abs(extract_prosody(tone(kProsodyFrame, 250.0), {}).energy_rms - std::sqrt(0.5)) < 1e-3);
}

TEST_CASE("prosody: noise and silence are unvoiced") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Eigen::VectorXf x = noise(kProsodyFrame, 0.3, seed);
    double peak = 0;
    for (int lag = 40; lag <= 267; ++lag) peak = std::max(peak, naive_autocorr(x, lag));
    CHECK(peak < 0.45);
    CHECK_FALSE(extract_prosody(x, {}).pitch_hz.has_value());
  }
  const auto s = extract_prosody(Eigen::VectorXf::Zero(kProsodyFrame), {});
  CHECK(s.energy_rms == 0.0);
  CHECK_FALSE(s.pitch_hz.has_value());
  CHECK_THROWS_AS(extract_prosody(Eigen::VectorXf::Zero(320), {}), BadFrameLength);
}

TEST_CASE("property: voiced pitch stays in range") {
  std::mt19937 rng(44);
  std::uniform_real_distribution<double> f(40, 600);
  for (int i = 0; i < 200; ++i) {
    const auto p = extract_prosody(Eigen::VectorXf(tone(kProsodyFrame, f(rng)) + noise(kProsodyFrame, 0.2, rng())), {});
    if (p.pitch_hz) {
      CHECK(*p.pitch_hz >= 60.0);
      CHECK(*p.pitch_hz <= 400.0);
    }
  }
}

TEST_CASE("mel filterbank rows sum to one") {
  const Eigen::MatrixXd fb = mel_filterbank<double>();
  CHECK(fb.rows() == 26);
  CHECK(fb.cols() == 257);
  for (Eigen::Index r = 0; r < fb.rows(); ++r) CHECK(std::abs(fb.row(r).sum() - 1.0) < 1e-6);
  CHECK(fb.minCoeff() >= 0.0);
  for (int filters : {10, 26, 40, 64}) {
    const Eigen::MatrixXf f = mel_filterbank<float>(filters, 256);
    for (Eigen::Index r = 0; r < f.rows(); ++r) CHECK(std::abs(f.row(r).sum() - 1.0f) < 1e-6f);
  }
  const Eigen::MatrixXd m = mel_features(tone(16000, 440.0));
  CHECK(m.rows() == (16000 - 400) / 160 + 1);
  CHECK(m.cols() == 26);
  // the 440 Hz tone lands in the filter whose centre is nearest 440 Hz
  Eigen::Index arg;
  m.row(10).maxCoeff(&arg);
  std::vector<double> centres;
  for (int i = 1; i <= 26; ++i) centres.push_back(mel_to_hz(hz_to_mel(8000.0) * i / 27));
  Eigen::Index nearest = 0;
  for (std::size_t i = 0; i < centres.size(); ++i)
    if (std::abs(centres[i] - 440) < std::abs(centres[std::size_t(nearest)] - 440)) nearest = Eigen::Index(i);
  CHECK(std::abs(arg - nearest) <= 1);
}

TEST_CASE("mock speech and valence providers") {
  MockSpeechToText stt;
  SpeechSegment s;
  s.samples = Eigen::VectorXf::Zero(16000);
  s.start_time = from_micros(5000000);
  s.end_time = from_micros(6000000);
  CHECK(stt.transcribe(s) == "mock-transcript-1000ms");
  CHECK(stt.transcribe(s) == stt.transcribe(s));

  MockValenceClassifier val;
  ValenceInput silent;
  silent.prosody = prosody_track(Eigen::VectorXf::Zero(6400), {});
  for (double p : val.classify(silent)) CHECK(p == doctest::Approx(1.0 / 3));

  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    ValenceInput in;
    in.prosody = prosody_track(Eigen::VectorXf(tone(3200, 80 + rng() % 300, 0.1 + 0.01 * (rng() % 90))), {});
    const auto a = val.classify(in), b = val.classify(in);
    CHECK(a == b);
    CHECK(std::abs(a[0] + a[1] + a[2] - 1.0) < 1e-6);
  }
  CHECK_THROWS_AS(make_speech_to_text({"none", {}}), ProviderUnavailable);
  CHECK_THROWS_AS(make_valence_classifier({"http", {}}), ProviderUnavailable);
}

TEST_CASE("pcm16 round trip") {
  const Eigen::VectorXf x = tone(1000, 300.0, 0.9);
  const Eigen::VectorXf y = from_pcm16le(to_pcm16le(x));
  CHECK((x - y).cwiseAbs().maxCoeff() < 1.0f / 16000.0f);
  const auto clipped = from_pcm16le(to_pcm16le(Eigen::VectorXf::Constant(2, 3.0f)));
  CHECK(clipped(0) == doctest::Approx(32767.0 / 32768.0));
}

TEST_CASE("HTTP speech adapter") {
  httplib::Server server;
  nlohmann::json seen;
  server.Post("/stt", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(R"({"text":"hello there"})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/stt";

  SpeechSegment s;
  s.samples = tone(3200, 200.0, 0.5);
  HttpSpeechToText stt({url, "tok", std::chrono::milliseconds(2000)});
  CHECK(stt.transcribe(s) == "hello there");
  CHECK(seen["sample_rate"] == 16000);
  CHECK(base64_decode(seen["audio_b64"].get<std::string>()) == to_pcm16le(s.samples));
  server.stop();
  th.join();
  HttpSpeechToText down({url, "", std::chrono::milliseconds(200)});
  CHECK_THROWS_AS(down.transcribe(s), NetworkTimeout);
}

namespace {

struct AudioRun {
  std::vector<VadFlag> vad;
  std::vector<ProsodyFeatures> prosody;
  std::vector<Transcript> text;
  std::vector<ValenceScores> valence;
  RunReport report;
};

AudioRun run_audio(const Eigen::VectorXf& signal, std::vector<int> chunks, const AudioProviders& providers,
                   int rate = kSampleRate) {
  Pipeline p;
  auto src = p.add_source("mic");
  auto out = src.output<AudioBuffer>("audio", PayloadKind::audio_buffer);
  src.body([&, out](const SourceContext&) {
    Eigen::Index at = 0;
    std::size_t k = 0;
    while (at < signal.size()) {
      const Eigen::Index n = std::min<Eigen::Index>(chunks[k++ % chunks.size()], signal.size() - at);
      AudioBuffer b{signal.segment(at, n), rate};
      out.emit(std::move(b), from_micros(std::int64_t(std::llround(double(at) * 1e6 / kSampleRate))));
      at += n;
    }
  });
  const SubscriptionOptions lossless{256, DeliveryPolicy::block};
  auto streams = add_audio(p, out.stream(), providers, {}, lossless);
  auto r = std::make_shared<AudioRun>();
  auto sink = p.add_component("sink");
  sink.input(streams.vad, [r](const Message<VadFlag>& m) { r->vad.push_back(m.payload()); }, lossless);
  sink.input(streams.prosody, [r](const Message<ProsodyFeatures>& m) { r->prosody.push_back(m.payload()); }, lossless);
  if (streams.transcripts.valid())
    sink.input(streams.transcripts, [r](const Message<Transcript>& m) { r->text.push_back(m.payload()); }, lossless);
  if (streams.valence.valid())
    sink.input(streams.valence, [r](const Message<ValenceScores>& m) { r->valence.push_back(m.payload()); }, lossless);
  r->report = p.run();
  return *r;
}

}  // namespace

TEST_CASE("audio components on a scripted session") {
  const Eigen::VectorXf sig =
      concat({noise(16000, 1e-3, 5), tone(24000, 200.0, 0.5), noise(16000, 1e-3, 6), tone(1600, 200.0, 0.5),
              noise(16000, 1e-3, 7)});
  AudioProviders prov{std::make_shared<MockSpeechToText>(), std::make_shared<MockValenceClassifier>()};
  auto r = run_audio(sig, {1600}, prov);
  const auto oracle = vad_oracle(sig);
  REQUIRE(r.vad.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(r.vad[i].active == oracle[i]);
    CHECK(r.vad[i].frame_time == from_micros(std::int64_t(i) * 20000));
  }
  CHECK(r.prosody.size() == oracle.size() - 1);
  // speech 1.5 s plus 13 hangover frames; the 0.1 s blip plus hangover is 0.36 s
  REQUIRE(r.text.size() == 2);
  CHECK(r.text[0].text == "mock-transcript-1760ms");
  CHECK(r.text[0].start_time == from_micros(1000000));
  CHECK(r.text[1].text == "mock-transcript-360ms");
  REQUIRE(r.valence.size() == 2);
  CHECK(r.valence[0].probabilities[2] > r.valence[0].probabilities[0]);  // 200 Hz is above the mock's pivot

  int voiced = 0;
  for (const auto& p : r.prosody)
    if (p.pitch_hz) {
      ++voiced;
      CHECK(std::abs(*p.pitch_hz - 200.0) <= 2.0);
    }
  CHECK(voiced >= 70);
}

TEST_CASE("property: framing does not depend on buffer sizes") {
  const Eigen::VectorXf sig = concat({noise(8000, 1e-3, 9), tone(8000, 150.0, 0.4), noise(8000, 1e-3, 10)});
  AudioProviders prov{std::make_shared<MockSpeechToText>(), nullptr};
  const auto base = run_audio(sig, {320}, prov);
  std::mt19937 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> chunks;
    for (int i = 0; i < 50; ++i) chunks.push_back(1 + int(rng() % 2000));
    const auto r = run_audio(sig, chunks, prov);
    REQUIRE(r.vad.size() == base.vad.size());
    for (std::size_t i = 0; i < r.vad.size(); ++i) {
      CHECK(r.vad[i].active == base.vad[i].active);
      CHECK(r.vad[i].frame_time == base.vad[i].frame_time);
    }
    REQUIRE(r.text.size() == base.text.size());
    for (std::size_t i = 0; i < r.text.size(); ++i) CHECK(r.text[i].text == base.text[i].text);
  }
}

TEST_CASE("speech provider outage keeps the pipeline alive") {
  const Eigen::VectorXf sig = concat({noise(16000, 1e-3, 5), tone(16000, 200.0, 0.5), noise(8000, 1e-3, 6)});
  AudioProviders prov{std::make_shared<HttpSpeechToText>(HttpEndpoint{"http://127.0.0.1:9/none", "", std::chrono::milliseconds(100)}),
                      nullptr};
  auto r = run_audio(sig, {1600}, prov);
  CHECK(r.text.empty());
  CHECK(r.report.at("audio.transcript").dropped == 1);
  CHECK(r.vad.size() == 125);

  auto wrong_rate = run_audio(sig, {1600}, prov, 8000);
  CHECK(wrong_rate.vad.empty());
  CHECK(wrong_rate.report.at("audio.vad").dropped == 25);
}
