#pragma once

#include <array>
#include <cmath>
#include <string>

#include "affect/core/error.hpp"

namespace affect {

AFFECT_DEFINE_ERROR(InvalidScores, "invalid_scores");

/// Renormalises provider output whose sum is within `slack` of one; anything
/// further off, negative or non-finite is rejected with InvalidScores.
template <std::size_t N>
std::array<double, N> enforce_distribution(std::array<double, N> p, double slack = 1e-3) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || v > 1.0 + slack) throw InvalidScores("probability out of range");
    sum += v;
  }
  if (std::abs(sum - 1.0) > slack) throw InvalidScores("probabilities sum to " + std::to_string(sum));
  for (double& v : p) v /= sum;
  return p;
}

template <std::size_t N>
std::array<double, N> softmax(const std::array<double, N>& logits) {
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  std::array<double, N> p{};
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) sum += (p[i] = std::exp(logits[i] - hi));
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace affect
