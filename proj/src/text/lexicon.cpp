#include "affect/text/lexicon.hpp"

#include <fstream>

#include "affect/core/deadline.hpp"
#include "affect/core/distribution.hpp"
#include "affect/text/tokenize.hpp"

namespace affect::text {

namespace {

// Keep in sync with data/lexicons/<category>.txt.
const std::array<std::vector<std::string>, kSentimentCategories> kBuiltin{{
    {"happy", "joy", "joyful", "cheerful", "delighted", "excited", "glad", "great", "lively", "enthusiastic",
     "fun", "awesome", "love", "wonderful", "energetic", "proud"},
    {"afraid", "scared", "frightened", "nervous", "anxious", "worried", "panic", "terrified", "jittery",
     "shaky", "fear", "dread", "alarmed"},
    {"sad", "unhappy", "depressed", "lonely", "blue", "downhearted", "alone", "miserable", "grief", "cry",
     "crying", "sorrow", "gloomy"},
    {"surprised", "amazed", "astonished", "wow", "unexpected", "shocked", "startled", "sudden", "suddenly"},
    {"angry", "hostile", "irritable", "scornful", "disgusted", "loathing", "hate", "furious", "mad", "annoyed",
     "rage", "outraged"},
    {"calm", "relaxed", "serene", "peaceful", "content", "comfortable", "tranquil", "quiet", "ease", "gentle"},
    {"tired", "sleepy", "sluggish", "drowsy", "exhausted", "weary", "fatigued", "drained", "worn", "yawn"},
    {"guilty", "ashamed", "blameworthy", "sorry", "regret", "fault", "shame", "apologize", "disgusted",
     "dissatisfied"},
}};

}  // namespace

LexiconSentiment::LexiconSentiment() {
  for (std::size_t c = 0; c < kSentimentCategories; ++c) lexicons_[c].insert(kBuiltin[c].begin(), kBuiltin[c].end());
}

std::set<std::string> read_term_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read term list " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    out.insert(ascii_fold_lower(std::string_view(line).substr(first, last - first + 1)));
  }
  return out;
}

LexiconSentiment LexiconSentiment::from_directory(const std::filesystem::path& dir) {
  Lexicons lex;
  for (std::size_t c = 0; c < kSentimentCategories; ++c)
    lex[c] = read_term_list(dir / (std::string(kSentimentNames[c]) + ".txt"));
  return LexiconSentiment(std::move(lex));
}

std::array<double, kSentimentCategories> LexiconSentiment::classify(std::string_view text) const {
  std::array<double, kSentimentCategories> hits{};
  double total = 0.0;
  for (const auto& [gram, count] : tokenize_ngrams(text))
    for (std::size_t c = 0; c < kSentimentCategories; ++c)
      if (lexicons_[c].contains(gram)) {
        hits[c] += count;
        total += count;
      }
  for (double& h : hits) h = (h + 1.0) / (total + double(kSentimentCategories));
  return hits;
}

std::shared_ptr<const LanguageSentimentProvider> make_language_sentiment(const ProviderConfig& config,
                                                                         const std::filesystem::path& lexicon_dir) {
  if (config.kind == "lexicon" || config.kind == "mock") {
    if (lexicon_dir.empty()) return std::make_shared<LexiconSentiment>();
    return std::make_shared<LexiconSentiment>(LexiconSentiment::from_directory(lexicon_dir));
  }
  throw ProviderUnavailable("language sentiment provider '" + config.kind + "' is not available");
}

Stream<LanguageSentiment> add_language_sentiment(Pipeline& pipeline, const Stream<audio::Transcript>& transcripts,
                                                 std::shared_ptr<const LanguageSentimentProvider> provider,
                                                 SubscriptionOptions delivery) {
  auto c = pipeline.add_component("language_sentiment");
  auto out = c.output<LanguageSentiment>("audio.sentiment", PayloadKind::emotion_scores);
  c.input(transcripts, [c, out, provider](const Message<audio::Transcript>& m) mutable {
    const auto probs = guarded([&] { return enforce_distribution(provider->classify(m->text)); })();
    if (!probs) {
      c.count_drop(out.descriptor());
      return;
    }
    out.emit(LanguageSentiment{*probs, m->start_time, m->end_time}, m.originating_time());
  }, delivery);
  return out.stream();
}

}  // namespace affect::text
