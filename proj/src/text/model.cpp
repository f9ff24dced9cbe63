#include "affect/text/model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "affect/text/tokenize.hpp"

namespace affect::text {

SentimentModel::SentimentModel(std::vector<std::string> features, Eigen::VectorXd weights, double bias)
    : features_(std::move(features)), weights_(std::move(weights)), bias_(bias) {
  if (Eigen::Index(features_.size()) != weights_.size())
    throw std::invalid_argument("weight count does not match feature count");
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (!index_.emplace(features_[i], Eigen::Index(i)).second)
      throw std::invalid_argument("duplicate feature '" + features_[i] + "'");
}

double SentimentModel::score(std::string_view text) const {
  double z = bias_;
  for (const auto& g : ngram_set(text))
    if (auto it = index_.find(g); it != index_.end()) z += weights_(it->second);
  return sigmoid(z);
}

nlohmann::json SentimentModel::to_json() const {
  return {{"features", features_},
          {"weights", std::vector<double>(weights_.data(), weights_.data() + weights_.size())},
          {"bias", bias_}};
}

SentimentModel SentimentModel::from_json(const nlohmann::json& doc) {
  try {
    auto features = doc.at("features").get<std::vector<std::string>>();
    const auto w = doc.at("weights").get<std::vector<double>>();
    return SentimentModel(std::move(features), Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size())),
                          doc.at("bias").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed sentiment model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed sentiment model: ") + e.what());
  }
}

SparseDesign<double> design_matrix(const std::vector<Document>& corpus, const std::vector<std::string>& features) {
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < features.size(); ++i) index.emplace(features[i], Eigen::Index(i));
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t r = 0; r < corpus.size(); ++r)
    for (const auto& g : ngram_set(corpus[r].text))
      if (auto it = index.find(g); it != index.end()) entries.emplace_back(Eigen::Index(r), it->second, 1.0);
  SparseDesign<double> x(Eigen::Index(corpus.size()), Eigen::Index(features.size()));
  x.setFromTriplets(entries.begin(), entries.end());
  return x;
}

namespace {

Eigen::VectorXd labels(const std::vector<Document>& corpus) {
  Eigen::VectorXd y(Eigen::Index(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) y(Eigen::Index(i)) = corpus[i].label == 1 ? 1.0 : 0.0;
  return y;
}

SparseDesign<double> select_rows(const SparseDesign<double>& x, const std::vector<Eigen::Index>& rows) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (SparseDesign<double>::InnerIterator it(x, rows[r]); it; ++it)
      entries.emplace_back(Eigen::Index(r), it.col(), it.value());
  SparseDesign<double> out(Eigen::Index(rows.size()), x.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

double held_out_log_loss(const SparseDesign<double>& x, const Eigen::VectorXd& y, const LogisticFit<double>& fit) {
  // unregularised loss on the held-out rows
  return logistic_objective<double>(x, y, fit.w, fit.b, 0.0).loss;
}

}  // namespace

TrainResult train_logistic(const std::vector<Document>& corpus, const std::vector<std::string>& features,
                           const TrainParams& params) {
  std::size_t pos = 0;
  for (const auto& d : corpus) pos += d.label == 1;
  if (pos < 2 || corpus.size() - pos < 2) throw DegenerateCorpus("need at least two documents per label");
  if (params.lambda_grid.empty()) throw std::invalid_argument("empty regularisation grid");

  const SparseDesign<double> x = design_matrix(corpus, features);
  const Eigen::VectorXd y = labels(corpus);
  const std::size_t k = std::min<std::size_t>(std::size_t(std::max(params.folds, 2)), corpus.size());

  std::vector<Eigen::Index> order(corpus.size());
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::mt19937_64 rng(params.fold_seed);
  std::shuffle(order.begin(), order.end(), rng);

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : params.lambda_grid) {
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<Eigen::Index> train, test;
      for (std::size_t i = 0; i < order.size(); ++i) (i % k == f ? test : train).push_back(order[i]);
      Eigen::VectorXd ytr(Eigen::Index(train.size())), yte(Eigen::Index(test.size()));
      for (std::size_t i = 0; i < train.size(); ++i) ytr(Eigen::Index(i)) = y(train[i]);
      for (std::size_t i = 0; i < test.size(); ++i) yte(Eigen::Index(i)) = y(test[i]);
      const auto fit = fit_logistic<double>(select_rows(x, train), ytr, lambda, params.descent);
      total += held_out_log_loss(select_rows(x, test), yte, fit);
    }
    const double mean = total / double(k);
    result.cv_loss.push_back(mean);
    if (mean < best) {
      best = mean;
      result.lambda = lambda;
    }
  }
  const auto fit = fit_logistic<double>(x, y, result.lambda, params.descent);
  result.model = SentimentModel(features, fit.w, fit.b);
  result.converged = fit.converged;
  result.iterations = fit.iterations;
  return result;
}

}  // namespace affect::text
