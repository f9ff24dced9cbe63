#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "affect/core/base64.hpp"
#include "affect/vision/components.hpp"
#include "doctest.h"
#include "httplib.h"

using namespace affect;
using namespace affect::vision;

namespace {

VideoFrame blank(int w = 64, int h = 48) {
  VideoFrame f(w, h);
  f.fill(20, 20, 20);
  return f;
}

// Independent oracle: union-find labelling of 4-connected same-colour
// regions, keeping fully filled rectangles of at least 4x4.
std::vector<BoundingBox> marker_oracle(const VideoFrame& f) {
  const int n = f.width * f.height;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  auto same = [&](int a, int b) {
    return std::equal(f.pixels.begin() + 3 * a, f.pixels.begin() + 3 * a + 3, f.pixels.begin() + 3 * b);
  };
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const int i = y * f.width + x;
      if (x + 1 < f.width && same(i, i + 1)) parent[find(i)] = find(i + 1);
      if (y + 1 < f.height && same(i, i + f.width)) parent[find(i)] = find(i + f.width);
    }
  std::map<int, std::array<int, 5>> regions;  // x0,y0,x1,y1,count
  for (int i = 0; i < n; ++i) {
    if (same(i, 0)) continue;
    const int r = find(i), x = i % f.width, y = i / f.width;
    auto it = regions.find(r);
    if (it == regions.end()) {
      regions[r] = {x, y, x, y, 1};
    } else {
      auto& a = it->second;
      a = {std::min(a[0], x), std::min(a[1], y), std::max(a[2], x), std::max(a[3], y), a[4] + 1};
    }
  }
  std::vector<BoundingBox> out;
  for (auto& [_, a] : regions) {
    BoundingBox b{a[0], a[1], a[2] - a[0] + 1, a[3] - a[1] + 1};
    if (b.w >= 4 && b.h >= 4 && b.area() == a[4]) out.push_back(b);
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  return out;
}

FaceDetection det_at(double cx, double cy, int size = 40) {
  FaceDetection d;
  d.bbox = {int(std::lround(cx - size / 2.0)), int(std::lround(cy - size / 2.0)), size, size};
  d.landmarks = canonical_landmarks(d.bbox);
  return d;
}

}  // namespace

TEST_CASE("marker detector: blank, single and two markers") {
  MarkerFaceDetector detector;
  CHECK(detector.detect(blank()).empty());

  auto f = blank(100, 80);
  f.fill_rect({10, 10, 40, 40}, 200, 150, 120);
  auto one = detector.detect(f);
  REQUIRE(one.size() == 1);
  CHECK(one[0].bbox == BoundingBox{10, 10, 40, 40});
  CHECK(one[0].landmarks.size() == 15);
  for (auto& l : one[0].landmarks) CHECK((l.x >= 10 && l.x < 50 && l.y >= 10 && l.y < 50));
  CHECK(one[0].confidence == 1.0);

  auto g = blank(160, 80);
  g.fill_rect({90, 5, 30, 30}, 10, 200, 30);
  g.fill_rect({5, 30, 20, 25}, 200, 10, 30);
  auto two = detector.detect(g);
  auto expect = marker_oracle(g);
  REQUIRE(two.size() == 2);
  REQUIRE(expect.size() == 2);
  CHECK(two[0].bbox == expect[0]);
  CHECK(two[1].bbox == expect[1]);
  CHECK(two[0].bbox.x < two[1].bbox.x);
}

TEST_CASE("marker detector ignores non-rectangles and specks and agrees with the oracle") {
  MarkerFaceDetector detector;
  std::mt19937 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = blank(120, 90);
    const int k = 1 + int(rng() % 4);
    for (int i = 0; i < k; ++i) {
      BoundingBox b{int(rng() % 100), int(rng() % 70), 2 + int(rng() % 20), 2 + int(rng() % 20)};
      f.fill_rect(b, std::uint8_t(40 + rng() % 200), std::uint8_t(40 + rng() % 200), std::uint8_t(rng() % 255));
    }
    auto got = detector.detect(f);
    auto expect = marker_oracle(f);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].bbox == expect[i]);
  }
  auto l = blank(80, 80);
  l.fill_rect({10, 10, 30, 10}, 255, 0, 0);
  l.fill_rect({10, 10, 10, 30}, 255, 0, 0);  // L shape
  CHECK(detector.detect(l).empty());
}

TEST_CASE("tracker: static face keeps its id") {
  FaceTracker tracker;
  std::vector<FaceDetection> d{det_at(50, 50)};
  auto a = tracker.update(d);
  auto b = tracker.update(d);
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  CHECK(a[0].id == b[0].id);
}

TEST_CASE("tracker: single-frame dropout within max_gap keeps the id") {
  // Scripted trajectory simulated by hand: face at x=50 moving 3 px/frame,
  // absent in frame 3. Gap of 2 frames doubles the 20 px radius to 40 px.
  FaceTracker tracker;
  std::vector<std::uint64_t> ids;
  for (int f = 0; f < 8; ++f) {
    std::vector<FaceDetection> d;
    if (f != 3) d.push_back(det_at(50 + 3 * f, 60));
    auto t = tracker.update(d);
    if (f != 3) ids.push_back(t.at(0).id);
  }
  for (auto id : ids) CHECK(id == ids.front());
}

TEST_CASE("tracker: retired ids are never reused") {
  TrackerParams p;
  p.max_gap = 2;
  FaceTracker tracker(p);
  const auto first = tracker.update(std::vector{det_at(50, 50)}).at(0).id;
  for (int i = 0; i < 3; ++i) tracker.update(std::vector<FaceDetection>{});
  CHECK(tracker.tracks().empty());
  const auto second = tracker.update(std::vector{det_at(50, 50)}).at(0).id;
  CHECK(second > first);
}

TEST_CASE("tracker: far-apart slow faces never swap over 100 frames") {
  FaceTracker tracker;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> step(-3.5, 3.5);
  double ax = 100, ay = 100, bx = 300, by = 100;
  std::uint64_t id_a = 0, id_b = 0;
  for (int f = 0; f < 100; ++f) {
    auto t = tracker.update(std::vector{det_at(ax, ay), det_at(bx, by)});
    REQUIRE(t.size() == 2);
    if (f == 0) {
      id_a = t[0].id;
      id_b = t[1].id;
    }
    CHECK(t[0].id == id_a);
    CHECK(t[1].id == id_b);
    ax += step(rng), ay += step(rng), bx += step(rng), by += step(rng);
  }
}

TEST_CASE("property: smooth trajectories keep a constant id") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    FaceTracker tracker;
    const int size = 30 + int(rng() % 40);
    const double max_step = 0.5 * size * 0.9;
    std::uniform_real_distribution<double> dir(0, 2 * M_PI), mag(0, max_step);
    double x = 200, y = 200;
    std::optional<std::uint64_t> id;
    for (int f = 0; f < 60; ++f) {
      auto t = tracker.update(std::vector{det_at(x, y, size)});
      if (!id) id = t[0].id;
      CHECK(t[0].id == *id);
      const double a = dir(rng), m = mag(rng);
      x += m * std::cos(a) / std::sqrt(2.0);
      y += m * std::sin(a) / std::sqrt(2.0);
    }
  }
}

TEST_CASE("crop maps back to the original pixels exactly") {
  std::mt19937 rng(1);
  VideoFrame f(37, 23);
  for (auto& p : f.pixels) p = std::uint8_t(rng());
  for (int trial = 0; trial < 50; ++trial) {
    BoundingBox b{int(rng() % 30), int(rng() % 20), 0, 0};
    b.w = 1 + int(rng() % (37 - b.x));
    b.h = 1 + int(rng() % (23 - b.y));
    auto patch = crop(f, b);
    for (int y = 0; y < b.h; ++y)
      for (int x = 0; x < b.w; ++x)
        for (int c = 0; c < 3; ++c) CHECK(patch.at(x, y)[c] == f.at(b.x + x, b.y + y)[c]);
  }
  CHECK_THROWS_AS(crop(f, {30, 10, 10, 5}), std::out_of_range);
}

TEST_CASE("mock expression classifier contract") {
  MockExpressionClassifier clf;
  VideoFrame grey(8, 8);
  grey.fill(128, 128, 128);
  auto u = clf.classify(grey);
  for (double p : u.probabilities) CHECK(p == doctest::Approx(0.125).epsilon(1e-12));

  std::mt19937 rng(4);
  for (int i = 0; i < 200; ++i) {
    VideoFrame patch(6, 6);
    patch.fill(std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng()));
    auto s = clf.classify(patch);
    const double sum = std::accumulate(s.probabilities.begin(), s.probabilities.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-6);
    auto again = clf.classify(patch);
    CHECK(again.probabilities == s.probabilities);
  }
}

TEST_CASE("distribution enforcement") {
  std::array<double, 8> near{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 0.2005};
  auto fixed = enforce_distribution(near);
  CHECK(std::accumulate(fixed.begin(), fixed.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  std::array<double, 8> far{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 0.3};
  CHECK_THROWS_AS(enforce_distribution(far), InvalidScores);
  std::array<double, 8> negative{-0.1, 0.2, 0.1, 0.1, 0.2, 0.1, 0.2, 0.2};
  CHECK_THROWS_AS(enforce_distribution(negative), InvalidScores);
}

TEST_CASE("identity matching") {
  MockEmbeddingProvider emb;
  VideoFrame patch(10, 10);
  patch.fill(200, 100, 50);
  FaceEmbedding e = emb.embed(patch);
  CHECK(e.size() == 128);
  CHECK(std::abs(e.norm() - 1.0) < 1e-6);

  CHECK(match_identity(e, Gallery{{7, e}}, 0.5) == std::optional<std::uint64_t>(7));
  CHECK_FALSE(match_identity(e, Gallery{}, 0.5).has_value());

  std::mt19937 rng(12);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 10; ++trial) {
    Gallery g;
    for (std::uint64_t id : {11u, 22u, 33u}) {
      FaceEmbedding v(128);
      for (int i = 0; i < 128; ++i) v(i) = n01(rng);
      g.push_back({id, v.normalized()});
    }
    // brute-force cosine oracle
    const FaceEmbedding q = g[1].embedding;
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
      if (q.dot(g[i].embedding) > q.dot(g[best].embedding)) best = i;
    CHECK(match_identity(q, g, 0.5) == std::optional<std::uint64_t>(g[best].id));
    CHECK(g[best].id == 22);
  }
  CHECK_FALSE(match_identity(e, Gallery{{1, -e}}, 0.5).has_value());
}

TEST_CASE("mock pose estimator contract") {
  MockPoseEstimator pose;
  CHECK(pose.estimate(blank()).empty());
  auto f = blank(200, 200);
  f.fill_rect({80, 10, 30, 30}, 220, 180, 150);
  auto a = pose.estimate(f);
  REQUIRE(a.size() == 1);
  for (std::size_t j = 0; j < kPoseJointCount; ++j) {
    CHECK(a[0].keypoints[j].joint == kCocoJoints[j]);
    CHECK(a[0].keypoints[j].confidence >= 0.0);
    CHECK(a[0].keypoints[j].confidence <= 1.0);
  }
  auto b = pose.estimate(f);
  for (std::size_t j = 0; j < kPoseJointCount; ++j) {
    CHECK(b[0].keypoints[j].x == a[0].keypoints[j].x);
    CHECK(b[0].keypoints[j].y == a[0].keypoints[j].y);
  }
}

TEST_CASE("provider factory") {
  CHECK_THROWS_AS(make_face_detector({"none", {}}), ProviderUnavailable);
  CHECK_THROWS_AS(make_face_detector({"http", {}}), ProviderUnavailable);
  CHECK(make_face_detector({"mock", {}}) != nullptr);
  CHECK_THROWS_AS(make_expression_classifier({"none", {}}), ProviderUnavailable);
}

TEST_CASE("HTTP-JSON face detector adapter") {
  httplib::Server server;
  std::string seen_auth;
  nlohmann::json seen_request;
  server.Post("/detect", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_request = nlohmann::json::parse(req.body);
    nlohmann::json lm = nlohmann::json::array();
    for (int i = 0; i < 15; ++i) lm.push_back({12 + i, 14});
    nlohmann::json body{{"detections", {{{"bbox", {50, 40, 30, 30}}, {"landmarks", lm}, {"confidence", 0.8}},
                                         {{"bbox", {5, 5, 10, 10}}, {"landmarks", lm}, {"confidence", 0.9}}}}};
    res.set_content(body.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"detections":[{"bbox":[1,2,3]}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpFaceDetector det({base + "/detect", "secret", std::chrono::milliseconds(2000)});
  auto frame = blank(64, 48);
  frame.at(3, 4)[1] = 99;
  auto out = det.detect(frame);
  REQUIRE(out.size() == 2);
  CHECK(out[0].bbox == BoundingBox{5, 5, 10, 10});
  CHECK(out[1].bbox == BoundingBox{50, 40, 14, 8});  // clipped to 64x48
  CHECK(out[1].confidence == doctest::Approx(0.8));
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_request["width"] == 64);
  CHECK(base64_decode(seen_request["frame_b64"].get<std::string>()) == frame.pixels);

  HttpFaceDetector broken({base + "/broken", "", std::chrono::milliseconds(2000)});
  CHECK_THROWS_AS(broken.detect(frame), ParseError);
  server.stop();
  th.join();

  HttpFaceDetector down({base + "/detect", "", std::chrono::milliseconds(200)});
  CHECK_THROWS_AS(down.detect(frame), NetworkTimeout);
}

namespace {

struct SlowDetector final : FaceDetector {
  std::vector<FaceDetection> detect(const VideoFrame& f) const override {
    if (f.at(0, 0)[0] == 1) std::this_thread::sleep_for(std::chrono::milliseconds(400));
    return MarkerFaceDetector().detect(f);
  }
};

}  // namespace

TEST_CASE("vision components on a synthetic clip") {
  Pipeline p;
  auto src = p.add_source("camera");
  auto frames = src.output<VideoFrame>("video", PayloadKind::video_frame);
  src.body([frames](const SourceContext&) {
    for (int i = 0; i < 30; ++i) {
      auto f = blank(160, 100);
      if (i == 5) f.fill(1, 20, 20);  // makes SlowDetector exceed its deadline
      f.fill_rect({10 + i, 20, 30, 30}, 128, 128, 128);
      f.fill_rect({100, 20, 30, 30}, 200, 60, 40);
      frames.emit(std::move(f), from_micros(i * 66667));
    }
  });
  VisionProviders prov{std::make_shared<SlowDetector>(), std::make_shared<MockExpressionClassifier>(),
                       std::make_shared<MockEmbeddingProvider>(), std::make_shared<MockPoseEstimator>()};
  VisionOptions opt;
  opt.deadline = std::chrono::milliseconds(150);
  opt.identity_threshold = 0.99;
  VideoFrame red(4, 4);
  red.fill(200, 60, 40);
  opt.gallery.push_back({1000, MockEmbeddingProvider().embed(red)});
  const SubscriptionOptions lossless{256, DeliveryPolicy::block};
  auto vs = add_vision(p, frames.stream(), prov, opt, lossless);

  auto tracks = std::make_shared<std::vector<FaceTracks>>();
  auto exprs = std::make_shared<std::vector<FaceExpressions>>();
  auto poses = std::make_shared<std::size_t>(0);
  auto sink = p.add_component("sink");
  sink.input(vs.tracks, [tracks](const Message<FaceTracks>& m) { tracks->push_back(m.payload()); }, lossless);
  sink.input(vs.expressions, [exprs](const Message<FaceExpressions>& m) { exprs->push_back(m.payload()); }, lossless);
  sink.input(vs.poses, [poses](const Message<PoseSet>& m) { *poses += m->skeletons.size(); }, lossless);
  auto report = p.run();

  CHECK(tracks->size() == 29);  // frame 5 timed out
  CHECK(exprs->size() == 29);
  CHECK(report.at("face.tracks").emitted == 29);
  for (const auto& t : *tracks) {
    REQUIRE(t.faces.size() == 2);
    CHECK(t.faces[0].id == tracks->front().faces[0].id);
    CHECK_FALSE(t.faces[0].recognized);
    CHECK(t.faces[1].id == 1000);
    CHECK(t.faces[1].recognized);
  }
  for (const auto& e : *exprs) {
    REQUIRE(e.faces.size() == 2);
    for (double v : e.faces[0].scores.probabilities) CHECK(v == doctest::Approx(0.125));
  }
  CHECK(*poses == 60);
}
