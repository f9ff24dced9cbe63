#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "affect/vision/types.hpp"

namespace affect::vision {

template <typename Scalar>
struct GalleryEntry {
  std::uint64_t id;
  Embedding<Scalar> embedding;
};

using Gallery = std::vector<GalleryEntry<double>>;

/// Scales `v` to unit L2 norm. A zero vector is returned unchanged.
template <typename Derived>
Embedding<typename Derived::Scalar> normalized_embedding(const Eigen::MatrixBase<Derived>& v) {
  const auto n = v.norm();
  if (n == typename Derived::Scalar(0)) return v;
  return v / n;
}

/// Gallery id with the highest cosine similarity to `query`, provided it
/// reaches `threshold`. Gallery embeddings are expected to be unit norm; the
/// query is normalised here. Ties keep the earlier gallery entry.
template <typename Derived>
std::optional<std::uint64_t> match_identity(const Eigen::MatrixBase<Derived>& query,
                                            const std::vector<GalleryEntry<typename Derived::Scalar>>& gallery,
                                            typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  const Embedding<Scalar> q = normalized_embedding(query);
  std::optional<std::uint64_t> best;
  Scalar best_sim = threshold;
  for (const auto& g : gallery) {
    if (g.embedding.size() != q.size()) continue;
    const Scalar sim = q.dot(g.embedding);
    if (sim >= best_sim && (!best || sim > best_sim)) {
      best = g.id;
      best_sim = sim;
    }
  }
  return best;
}

}  // namespace affect::vision
