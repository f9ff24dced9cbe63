#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "affect/audio/types.hpp"
#include "affect/context/events.hpp"
#include "affect/physiology/vitals.hpp"
#include "affect/text/lexicon.hpp"
#include "affect/vision/types.hpp"
#include "json.hpp"

namespace affect::sinks {

using Json = nlohmann::ordered_json;

AFFECT_DEFINE_ERROR(SchemaViolation, "schema_violation");

// Bus payload encodings. None of them carries pixels, samples or free text
// other than transcripts.
Json to_json(const vision::BoundingBox& b);
Json expression_json(const std::array<double, vision::kExpressionCount>& p);
Json sentiment_json(const std::array<double, text::kSentimentCategories>& p);
Json valence_json(const std::array<double, 3>& p);

Json to_json(const vision::FaceTracks& v);
Json to_json(const vision::FaceExpressions& v);
Json to_json(const vision::PoseSet& v);
Json to_json(const physiology::HrEstimate& v);
Json to_json(const physiology::RespEstimate& v);
Json to_json(const audio::VadFlag& v);
Json to_json(const audio::ProsodyFeatures& v);
Json to_json(const audio::Transcript& v);
Json to_json(const audio::ValenceScores& v);
Json to_json(const text::LanguageSentiment& v);
Json to_json(const context::EmailSendEvent& v);
Json to_json(const context::InputActivity& v);

/// Required top-level keys per registered topic.
struct TopicSchema {
  std::string topic;
  std::vector<std::string> required;
};

/// Every topic the daemon can publish, including "metrics.row".
const std::vector<TopicSchema>& topic_schemas();
const TopicSchema* find_topic(std::string_view topic);

/// Throws SchemaViolation unless `topic` is registered and `payload` is an
/// object carrying the required keys.
void validate_payload(std::string_view topic, const Json& payload);

}  // namespace affect::sinks
