#include "affect/app/train.hpp"

#include <fstream>

namespace affect::app {

using nlohmann::json;

std::vector<text::Document> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read corpus " + path.string());
  std::vector<text::Document> corpus;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + " line " + std::to_string(number) + ": ";
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j.at("text").is_string() || !j.contains("label"))
      throw ParseError(where + "expected {\"text\": ..., \"label\": ...}");
    text::Document d;
    d.text = j.at("text").get<std::string>();
    const auto& label = j.at("label");
    if (label == "pos" || label == 1) d.label = 1;
    else if (label == "neg" || label == 0) d.label = 0;
    else throw ParseError(where + "label must be pos, neg, 1 or 0");
    corpus.push_back(std::move(d));
  }
  return corpus;
}

TrainSummary train_sentiment(const std::vector<text::Document>& corpus, const TrainOptions& options) {
  const auto ranked = text::select_features_mi(corpus, options.select);
  const auto features = text::prune_features(ranked, options.stoplist, options.cap);
  TrainSummary s;
  s.result = text::train_logistic(corpus, features, options.params);
  s.documents = corpus.size();
  std::size_t correct = 0;
  for (const auto& d : corpus) correct += (s.result.model.score(d.text) >= 0.5) == (d.label == 1);
  s.training_accuracy = corpus.empty() ? 0.0 : double(correct) / double(corpus.size());
  return s;
}

}  // namespace affect::app
