#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "affect/core/pipeline.hpp"
#include "affect/sinks/payloads.hpp"

namespace affect::sinks {

AFFECT_DEFINE_ERROR(SanitizeViolation, "sanitize_violation");

/// Window means of one face. The bbox is the mean rectangle.
struct FaceRow {
  std::uint64_t id = 0;
  std::array<double, 4> bbox{};  // x, y, w, h
  std::optional<std::array<double, vision::kExpressionCount>> expression;
  std::optional<double> hr_bpm;
  std::optional<double> resp_bpm;

  double area() const { return bbox[2] * bbox[3]; }
  bool operator==(const FaceRow&) const = default;
};

struct AppEventRow {
  Timestamp time{};
  context::AppEvent event;
  bool operator==(const AppEventRow&) const = default;
};

/// One aggregation window. Optional fields are omitted from the JSON form
/// when no input fell in the window.
struct MetricsRow {
  Timestamp window_start{};
  int face_count = 0;
  std::vector<FaceRow> faces;  // descending bbox area, then id
  std::optional<double> vad_fraction;
  std::string transcript;
  std::optional<std::array<double, text::kSentimentCategories>> language_sentiment;
  std::optional<double> pitch_mean;
  std::optional<double> energy_mean;
  std::optional<std::array<double, 3>> valence;
  std::vector<AppEventRow> app_events;
  bool calendar_active = false;
  std::vector<double> email_scores;
  bool keyboard_active = false;
  bool mouse_active = false;
  /// Extra top-level fields, emitted after the fixed ones.
  Json extensions = Json::object();

  bool operator==(const MetricsRow&) const = default;
};

Json to_json(const MetricsRow& row);
/// Throws ParseError on a document that is not a row.
MetricsRow row_from_json(const Json& doc);

enum class SanitizeMode { strict, permissive };

/// Keys that may never appear at any depth of a persisted or broadcast
/// document.
const std::vector<std::string>& forbidden_keys();

/// Forbidden keys throw SanitizeViolation in strict mode and are removed in
/// permissive mode. Binary blobs (JSON binary values, strings with control
/// bytes or invalid UTF-8, byte-valued arrays longer than 64 entries) are
/// rejected in both modes.
Json sanitize(Json doc, SanitizeMode mode = SanitizeMode::strict);

/// Pure aggregation of already windowed inputs. Every vector holds the
/// messages whose originating time lies in the window.
struct WindowInputs {
  std::vector<Message<vision::FaceTracks>> tracks;
  std::vector<Message<vision::FaceExpressions>> expressions;
  std::vector<Message<physiology::HrEstimate>> hr;
  std::vector<Message<physiology::RespEstimate>> resp;
  std::vector<Message<audio::VadFlag>> vad;
  std::vector<Message<audio::ProsodyFeatures>> prosody;
  std::vector<Message<audio::Transcript>> transcripts;
  std::vector<Message<audio::ValenceScores>> valence;
  std::vector<Message<text::LanguageSentiment>> sentiment;
  std::vector<Message<context::AppEvent>> apps;
  std::vector<Message<context::EmailSendEvent>> email;
  std::vector<Message<context::InputActivity>> input;
  /// Calendar events known so far (any originating time).
  std::vector<context::CalendarEvent> calendar;
};

MetricsRow aggregate_row(const WindowInputs& in, Timestamp window_start, Duration window_length);

/// Streams feeding the aggregator; invalid streams are simply absent.
struct AggregatorInputs {
  Stream<vision::FaceTracks> tracks;
  Stream<vision::FaceExpressions> expressions;
  Stream<physiology::HrEstimate> hr;
  Stream<physiology::RespEstimate> resp;
  Stream<audio::VadFlag> vad;
  Stream<audio::ProsodyFeatures> prosody;
  Stream<audio::Transcript> transcripts;
  Stream<audio::ValenceScores> valence;
  Stream<text::LanguageSentiment> sentiment;
  Stream<context::AppEvent> apps;
  Stream<context::CalendarEvent> calendar;
  Stream<context::EmailSendEvent> email;
  Stream<context::InputActivity> input;
};

struct AggregatorOptions {
  Duration window = std::chrono::seconds(1);
  /// First window start. Defaults to the grid window of the earliest input.
  std::optional<Timestamp> origin;
};

/// Emits one row per window on "metrics.row", stamped at the window start,
/// from the first window through the one holding the last input, empty
/// windows included. A window is released once every input's watermark has
/// passed its end.
Stream<MetricsRow> add_aggregator(Pipeline& pipeline, const AggregatorInputs& inputs,
                                  const AggregatorOptions& options = {}, SubscriptionOptions delivery = {});

}  // namespace affect::sinks
