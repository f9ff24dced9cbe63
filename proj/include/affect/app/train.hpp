#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "affect/text/model.hpp"

namespace affect::app {

/// NDJSON corpus, one {"text": "...", "label": "pos"|"neg"|1|0} per line.
/// Throws ParseError naming the line.
std::vector<text::Document> load_corpus(const std::filesystem::path& path);

struct TrainOptions {
  std::size_t select = 5000;  // top n-grams by mutual information
  std::size_t cap = 1200;     // kept after stoplist pruning
  std::set<std::string> stoplist;
  text::TrainParams params;
};

struct TrainSummary {
  text::TrainResult result;
  std::size_t documents = 0;
  double training_accuracy = 0.0;
};

/// MI selection, pruning, then cross-validated logistic regression.
TrainSummary train_sentiment(const std::vector<text::Document>& corpus, const TrainOptions& options = {});

}  // namespace affect::app
