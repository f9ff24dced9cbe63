#include "affect/text/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "affect/text/tokenize.hpp"

namespace affect::text {

double mutual_information(const Contingency& c) {
  const double n = double(c.present_pos + c.present_neg + c.absent_pos + c.absent_neg);
  if (n == 0) return 0.0;
  const double present = double(c.present_pos + c.present_neg), absent = n - present;
  const double pos = double(c.present_pos + c.absent_pos), neg = n - pos;
  auto term = [n](double joint, double a, double b) {
    return joint == 0 ? 0.0 : joint / n * std::log2(joint * n / (a * b));
  };
  const double mi = term(double(c.present_pos), present, pos) + term(double(c.present_neg), present, neg) +
                    term(double(c.absent_pos), absent, pos) + term(double(c.absent_neg), absent, neg);
  return std::max(0.0, mi);
}

std::vector<FeatureScore> rank_features_mi(const std::vector<Document>& corpus) {
  std::size_t pos = 0;
  for (const auto& d : corpus) pos += d.label == 1;
  const std::size_t neg = corpus.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateCorpus("corpus needs both labels");

  std::map<std::string, std::pair<std::size_t, std::size_t>> present;  // (pos, neg)
  for (const auto& d : corpus)
    for (const auto& g : ngram_set(d.text)) (d.label == 1 ? present[g].first : present[g].second)++;

  std::vector<FeatureScore> out;
  out.reserve(present.size());
  for (const auto& [g, counts] : present) {
    const Contingency c{counts.first, counts.second, pos - counts.first, neg - counts.second};
    out.push_back({g, mutual_information(c)});
  }
  // Mirror-image tables sum their terms in a different order; rank on MI
  // rounded to 1e-12 bits so such ties fall back to the lexicographic rule.
  auto key = [](double mi) { return std::llround(mi * 1e12); };
  std::sort(out.begin(), out.end(), [&](const FeatureScore& a, const FeatureScore& b) {
    if (key(a.mi) != key(b.mi)) return key(a.mi) > key(b.mi);
    return a.feature < b.feature;
  });
  return out;
}

std::vector<std::string> select_features_mi(const std::vector<Document>& corpus, std::size_t k) {
  auto ranked = rank_features_mi(corpus);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(std::move(ranked[i].feature));
  return out;
}

std::vector<std::string> prune_features(const std::vector<std::string>& ranked, const std::set<std::string>& stoplist,
                                        std::size_t cap) {
  std::vector<std::string> out;
  for (const auto& f : ranked) {
    if (out.size() >= cap) break;
    if (stoplist.contains(f)) continue;
    out.push_back(f);
  }
  return out;
}

}  // namespace affect::text
