#include "affect/sinks/payloads.hpp"

#include <algorithm>

namespace affect::sinks {

namespace {

template <std::size_t N, class Names>
Json named(const std::array<double, N>& p, const Names& names) {
  Json j = Json::object();
  for (std::size_t i = 0; i < N; ++i) j[std::string(names[i])] = p[i];
  return j;
}

constexpr std::array<std::string_view, 3> kValenceNames{"negative", "neutral", "positive"};

}  // namespace

Json to_json(const vision::BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Json expression_json(const std::array<double, vision::kExpressionCount>& p) {
  return named(p, vision::kExpressionNames);
}
Json sentiment_json(const std::array<double, text::kSentimentCategories>& p) {
  return named(p, text::kSentimentNames);
}
Json valence_json(const std::array<double, 3>& p) { return named(p, kValenceNames); }

Json to_json(const vision::FaceTracks& v) {
  Json faces = Json::array();
  for (const auto& f : v.faces)
    faces.push_back({{"id", f.id},
                     {"bbox", to_json(f.detection.bbox)},
                     {"confidence", f.detection.confidence},
                     {"recognized", f.recognized}});
  return {{"faces", std::move(faces)}};
}

Json to_json(const vision::FaceExpressions& v) {
  Json faces = Json::array();
  for (const auto& f : v.faces) faces.push_back({{"id", f.face_id}, {"expression", expression_json(f.scores.probabilities)}});
  return {{"faces", std::move(faces)}};
}

Json to_json(const vision::PoseSet& v) {
  Json skeletons = Json::array();
  for (const auto& s : v.skeletons) {
    Json joints = Json::object();
    for (const auto& k : s.keypoints) joints[std::string(k.joint)] = {k.x, k.y, k.confidence};
    skeletons.push_back(std::move(joints));
  }
  return {{"skeletons", std::move(skeletons)}};
}

Json to_json(const physiology::HrEstimate& v) {
  return {{"face_id", v.face_id},
          {"bpm", v.bpm},
          {"snr", v.snr},
          {"window_start", to_micros(v.window_start)},
          {"window_end", to_micros(v.window_end)}};
}

Json to_json(const physiology::RespEstimate& v) {
  return {{"face_id", v.face_id},
          {"breaths_per_minute", v.breaths_per_minute},
          {"window_start", to_micros(v.window_start)},
          {"window_end", to_micros(v.window_end)}};
}

Json to_json(const audio::VadFlag& v) { return {{"active", v.active}, {"frame_time", to_micros(v.frame_time)}}; }

Json to_json(const audio::ProsodyFeatures& v) {
  Json j;
  j["pitch_hz"] = v.pitch_hz ? Json(*v.pitch_hz) : Json(nullptr);
  j["energy_rms"] = v.energy_rms;
  j["frame_time"] = to_micros(v.frame_time);
  return j;
}

Json to_json(const audio::Transcript& v) {
  return {{"text", v.text}, {"start_time", to_micros(v.start_time)}, {"end_time", to_micros(v.end_time)}};
}

Json to_json(const audio::ValenceScores& v) {
  return {{"valence", valence_json(v.probabilities)},
          {"start_time", to_micros(v.start_time)},
          {"end_time", to_micros(v.end_time)}};
}

Json to_json(const text::LanguageSentiment& v) {
  return {{"sentiment", sentiment_json(v.probabilities)},
          {"start_time", to_micros(v.start_time)},
          {"end_time", to_micros(v.end_time)}};
}

Json to_json(const context::EmailSendEvent& v) {
  return {{"sentiment_score", v.sentiment_score}, {"send_time", to_micros(v.send_time)}};
}

Json to_json(const context::InputActivity& v) {
  return {{"keyboard_active", v.keyboard_active},
          {"mouse_active", v.mouse_active},
          {"window_time", to_micros(v.window_time)}};
}

const std::vector<TopicSchema>& topic_schemas() {
  static const std::vector<TopicSchema> schemas{
      {"face.tracks", {"faces"}},
      {"face.expression", {"faces"}},
      {"face.pose", {"skeletons"}},
      {"physio.hr", {"face_id", "bpm", "snr", "window_start", "window_end"}},
      {"physio.resp", {"face_id", "breaths_per_minute", "window_start", "window_end"}},
      {"audio.vad", {"active", "frame_time"}},
      {"audio.prosody", {"pitch_hz", "energy_rms", "frame_time"}},
      {"audio.transcript", {"text", "start_time", "end_time"}},
      {"audio.valence", {"valence", "start_time", "end_time"}},
      {"audio.sentiment", {"sentiment", "start_time", "end_time"}},
      {"context.app", {"app_name", "window_title_hash", "bounds", "event"}},
      {"context.calendar", {"attendee_count", "start_time", "duration", "is_remote"}},
      {"context.email", {"sentiment_score", "send_time"}},
      {"context.input", {"keyboard_active", "mouse_active", "window_time"}},
      {"metrics.row", {"window_start", "face_count", "faces", "transcript", "app_events", "calendar_active",
                       "email_scores", "keyboard_active", "mouse_active"}},
  };
  return schemas;
}

const TopicSchema* find_topic(std::string_view topic) {
  const auto& all = topic_schemas();
  auto it = std::find_if(all.begin(), all.end(), [&](const TopicSchema& s) { return s.topic == topic; });
  return it == all.end() ? nullptr : &*it;
}

void validate_payload(std::string_view topic, const Json& payload) {
  const auto* schema = find_topic(topic);
  if (!schema) throw SchemaViolation("unregistered topic '" + std::string(topic) + "'");
  if (!payload.is_object()) throw SchemaViolation("payload for '" + std::string(topic) + "' is not an object");
  for (const auto& key : schema->required)
    if (!payload.contains(key))
      throw SchemaViolation("payload for '" + std::string(topic) + "' lacks '" + key + "'");
}

}  // namespace affect::sinks
