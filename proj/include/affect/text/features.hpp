#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "affect/core/error.hpp"

namespace affect::text {

AFFECT_DEFINE_ERROR(DegenerateCorpus, "degenerate_corpus");

struct Document {
  std::string text;
  int label = 0;  // 0 negative, 1 positive
};

/// 2x2 presence/label contingency counts for one feature.
struct Contingency {
  std::size_t present_pos = 0;
  std::size_t present_neg = 0;
  std::size_t absent_pos = 0;
  std::size_t absent_neg = 0;
};

/// I(presence; label) in bits from the joint counts (0 log 0 = 0).
double mutual_information(const Contingency& c);

struct FeatureScore {
  std::string feature;
  double mi = 0.0;
};

/// Every n-gram of the corpus scored by binary-presence MI, ordered by MI
/// descending then lexicographically. Throws DegenerateCorpus unless both
/// labels occur.
std::vector<FeatureScore> rank_features_mi(const std::vector<Document>& corpus);

/// The first k entries of rank_features_mi.
std::vector<std::string> select_features_mi(const std::vector<Document>& corpus, std::size_t k);

/// Drops stoplisted n-grams while keeping order, then truncates to `cap`.
std::vector<std::string> prune_features(const std::vector<std::string>& ranked, const std::set<std::string>& stoplist,
                                        std::size_t cap);

}  // namespace affect::text
