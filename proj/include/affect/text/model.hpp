#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "affect/text/features.hpp"
#include "affect/text/logistic.hpp"
#include "json.hpp"

namespace affect::text {

/// Binary-presence logistic model over an ordered n-gram list.
class SentimentModel {
public:
  SentimentModel() = default;
  /// Throws std::invalid_argument on duplicate features or a weight count
  /// that does not match.
  SentimentModel(std::vector<std::string> features, Eigen::VectorXd weights, double bias);

  const std::vector<std::string>& features() const { return features_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }

  /// Positive-class probability of `text`.
  double score(std::string_view text) const;

  /// {"features":[...],"weights":[...],"bias":b}
  nlohmann::json to_json() const;
  /// Throws ParseError on a malformed document.
  static SentimentModel from_json(const nlohmann::json& doc);

private:
  std::vector<std::string> features_;
  Eigen::VectorXd weights_;
  double bias_ = 0.0;
  std::unordered_map<std::string, Eigen::Index> index_;
};

/// Row per document, column per feature, 1 where the n-gram is present.
SparseDesign<double> design_matrix(const std::vector<Document>& corpus, const std::vector<std::string>& features);

struct TrainParams {
  std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0};
  int folds = 5;
  std::uint64_t fold_seed = 0;
  DescentParams descent;
};

struct TrainResult {
  SentimentModel model;
  double lambda = 0.0;
  std::vector<double> cv_loss;  // mean held-out log loss per grid entry
  bool converged = false;
  int iterations = 0;
};

/// Picks the regularisation strength with the lowest mean held-out log loss
/// over seeded k-fold cross-validation (k = min(folds, corpus size); ties
/// keep the earlier grid entry), then refits on the whole corpus. Throws
/// DegenerateCorpus unless each label has at least two documents.
TrainResult train_logistic(const std::vector<Document>& corpus, const std::vector<std::string>& features,
                           const TrainParams& params = {});

}  // namespace affect::text
