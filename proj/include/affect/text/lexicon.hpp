#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "affect/audio/types.hpp"
#include "affect/core/pipeline.hpp"
#include "affect/core/provider_config.hpp"

namespace affect::text {

inline constexpr std::size_t kSentimentCategories = 8;
inline constexpr std::array<std::string_view, kSentimentCategories> kSentimentNames{
    "joviality", "fear", "sadness", "surprise", "hostility", "serenity", "fatigue", "guilt"};

/// Probabilities over kSentimentNames, in that order.
struct LanguageSentiment {
  std::array<double, kSentimentCategories> probabilities{};
  Timestamp start_time{};
  Timestamp end_time{};
};

class LanguageSentimentProvider {
public:
  virtual ~LanguageSentimentProvider() = default;
  virtual std::array<double, kSentimentCategories> classify(std::string_view text) const = 0;
};

using Lexicons = std::array<std::set<std::string>, kSentimentCategories>;

/// Counts token hits per category and returns (hits + 1) / (total hits + 8).
class LexiconSentiment final : public LanguageSentimentProvider {
public:
  LexiconSentiment();  // small built-in keyword lists
  explicit LexiconSentiment(Lexicons lexicons) : lexicons_(std::move(lexicons)) {}
  /// Reads `<dir>/<category>.txt`, one term per line; blank lines and lines
  /// starting with '#' are skipped. Throws ParseError on a missing file.
  static LexiconSentiment from_directory(const std::filesystem::path& dir);

  std::array<double, kSentimentCategories> classify(std::string_view text) const override;
  const Lexicons& lexicons() const { return lexicons_; }

private:
  Lexicons lexicons_;
};

/// One term per line, ASCII-folded to lowercase.
std::set<std::string> read_term_list(const std::filesystem::path& path);

/// kind "lexicon" (optionally with `lexicon_dir`) or "none".
std::shared_ptr<const LanguageSentimentProvider> make_language_sentiment(const ProviderConfig& config,
                                                                         const std::filesystem::path& lexicon_dir = {});

/// Scores every transcript on "audio.sentiment"; provider failures are
/// counted as drops.
Stream<LanguageSentiment> add_language_sentiment(Pipeline& pipeline, const Stream<audio::Transcript>& transcripts,
                                                 std::shared_ptr<const LanguageSentimentProvider> provider,
                                                 SubscriptionOptions delivery = {});

}  // namespace affect::text
